//! The model-invocation contract shared by live, record/replay, and mock
//! backends.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// How to call one model. Switching models is a matter of changing
/// `endpoint` and `model_name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    pub endpoint: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub want_logprobs: bool,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_max_tokens() -> u32 {
    256
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_retries() -> u32 {
    3
}

impl ModelSpec {
    /// A temperature-0 spec with default limits.
    pub fn new(id: impl Into<String>, endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        ModelSpec {
            id: id.into(),
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            seed: None,
            want_logprobs: false,
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
}

/// A model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    pub latency_ms: u64,
    pub usage: Usage,
}

/// What an adapter instance can do. Fixed for the adapter's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AdapterCapability {
    pub supports_logprobs: bool,
    pub supports_seed: bool,
    pub supports_embeddings: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterError {
    #[error("request timed out after {after_ms} ms")]
    Timeout { after_ms: u64 },
    #[error("endpoint returned {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("no recorded response for request {key}")]
    CacheMiss { key: String },
    #[error("configuration error: {message}")]
    Config { message: String },
    #[error("adapter lacks capability `{capability}`")]
    CapabilityMissing { capability: String },
    #[error("reference text is empty")]
    EmptyReference,
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error("malformed response: {message}")]
    Protocol { message: String },
}

impl AdapterError {
    pub fn missing(capability: &str) -> Self {
        AdapterError::CapabilityMissing { capability: capability.into() }
    }

    pub fn protocol(message: impl Into<String>) -> Self {
        AdapterError::Protocol { message: message.into() }
    }
}

/// A model backend. Implementations must be shareable across worker
/// threads.
pub trait Adapter: Send + Sync {
    fn capability(&self) -> AdapterCapability;

    fn complete(&self, spec: &ModelSpec, prompt: &str) -> Result<Completion, AdapterError>;

    /// Mean negative log-likelihood of `reference` as a continuation of
    /// `prompt`.
    fn score_reference_nll(&self, spec: &ModelSpec, prompt: &str, reference: &str) -> Result<f64, AdapterError> {
        let _ = (spec, prompt, reference);
        Err(AdapterError::missing("logprobs"))
    }

    fn embed(&self, spec: &ModelSpec, text: &str) -> Result<Vec<f64>, AdapterError> {
        let _ = (spec, text);
        Err(AdapterError::missing("embeddings"))
    }
}

macro_rules! forward_adapter {
    ($($ty:ty),*) => {$(
        impl<A: Adapter + ?Sized> Adapter for $ty {
            fn capability(&self) -> AdapterCapability {
                (**self).capability()
            }
            fn complete(&self, spec: &ModelSpec, prompt: &str) -> Result<Completion, AdapterError> {
                (**self).complete(spec, prompt)
            }
            fn score_reference_nll(&self, spec: &ModelSpec, prompt: &str, reference: &str) -> Result<f64, AdapterError> {
                (**self).score_reference_nll(spec, prompt, reference)
            }
            fn embed(&self, spec: &ModelSpec, text: &str) -> Result<Vec<f64>, AdapterError> {
                (**self).embed(spec, text)
            }
        }
    )*};
}

forward_adapter!(&A, Box<A>, Arc<A>);
