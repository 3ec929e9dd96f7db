//! An [`Adapter`] that speaks the OpenAI wire format over a pluggable
//! [`Transport`], plus the in-memory replay transport.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adapter::{Adapter, AdapterCapability, AdapterError, Completion, ModelSpec};
use crate::wire::{
    cache_key, ChatRequest, ChatResponse, CompletionResponse, EmbeddingRequest, EmbeddingResponse, ScoreRequest,
    CHAT_PATH, COMPLETIONS_PATH, EMBEDDINGS_PATH,
};

/// A response payload and how long it took to arrive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub response: Value,
    #[serde(default)]
    pub latency_ms: u64,
}

/// Moves one JSON request to an endpoint path and returns the response.
pub trait Transport: Send + Sync {
    fn send(&self, spec: &ModelSpec, path: &str, body: &Value) -> Result<Exchange, AdapterError>;
}

/// One line of a replay cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response: Value,
    #[serde(default)]
    pub latency_ms: u64,
}

/// Serves recorded responses by request key; unknown requests are a
/// [`AdapterError::CacheMiss`].
#[derive(Debug, Clone, Default)]
pub struct ReplayTransport {
    entries: BTreeMap<String, Exchange>,
}

impl ReplayTransport {
    /// Later entries with the same key replace earlier ones.
    pub fn new(entries: impl IntoIterator<Item = CacheEntry>) -> Self {
        let entries =
            entries.into_iter().map(|e| (e.key, Exchange { response: e.response, latency_ms: e.latency_ms })).collect();
        ReplayTransport { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Transport for ReplayTransport {
    fn send(&self, _spec: &ModelSpec, _path: &str, body: &Value) -> Result<Exchange, AdapterError> {
        let key = cache_key(body);
        self.entries.get(&key).cloned().ok_or(AdapterError::CacheMiss { key })
    }
}

/// Adapter over any [`Transport`]. Capability is fixed at construction.
#[derive(Debug, Clone)]
pub struct WireAdapter<T> {
    transport: T,
    capability: AdapterCapability,
}

impl<T: Transport> WireAdapter<T> {
    pub fn new(transport: T, capability: AdapterCapability) -> Self {
        WireAdapter { transport, capability }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        spec: &ModelSpec,
        path: &str,
        req: &Req,
    ) -> Result<(Resp, u64), AdapterError> {
        let body = serde_json::to_value(req).map_err(|e| AdapterError::protocol(e.to_string()))?;
        let ex = self.transport.send(spec, path, &body)?;
        let resp = serde_json::from_value(ex.response).map_err(|e| AdapterError::protocol(e.to_string()))?;
        Ok((resp, ex.latency_ms))
    }
}

impl<T: Transport> Adapter for WireAdapter<T> {
    fn capability(&self) -> AdapterCapability {
        self.capability
    }

    fn complete(&self, spec: &ModelSpec, prompt: &str) -> Result<Completion, AdapterError> {
        let mut req = ChatRequest::new(spec, prompt);
        if !self.capability.supports_seed {
            req.seed = None;
        }
        req.logprobs = spec.want_logprobs && self.capability.supports_logprobs;
        let (resp, latency): (ChatResponse, u64) = self.call(spec, CHAT_PATH, &req)?;
        resp.into_completion(latency, req.logprobs)
    }

    fn score_reference_nll(&self, spec: &ModelSpec, prompt: &str, reference: &str) -> Result<f64, AdapterError> {
        if !self.capability.supports_logprobs {
            return Err(AdapterError::missing("logprobs"));
        }
        if reference.trim().is_empty() {
            return Err(AdapterError::EmptyReference);
        }
        let req = ScoreRequest::new(spec, prompt, reference);
        let (resp, _): (CompletionResponse, u64) = self.call(spec, COMPLETIONS_PATH, &req)?;
        resp.reference_nll(prompt.chars().count())
    }

    fn embed(&self, spec: &ModelSpec, text: &str) -> Result<Vec<f64>, AdapterError> {
        if !self.capability.supports_embeddings {
            return Err(AdapterError::missing("embeddings"));
        }
        let req = EmbeddingRequest { model: spec.model_name.clone(), input: text.into() };
        let (resp, _): (EmbeddingResponse, u64) = self.call(spec, EMBEDDINGS_PATH, &req)?;
        resp.data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| AdapterError::protocol("embedding response has no data"))
    }
}

/// Transport answering from a [`MockAdapter`](crate::mock::MockAdapter)
/// with zero latency.
impl Transport for crate::mock::MockAdapter {
    fn send(&self, _spec: &ModelSpec, path: &str, body: &Value) -> Result<Exchange, AdapterError> {
        Ok(Exchange { response: self.respond(path, body)?, latency_ms: 0 })
    }
}
