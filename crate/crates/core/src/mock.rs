//! Deterministic in-process model used by tests and offline runs.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde_json::Value;

use crate::adapter::{Adapter, AdapterCapability, AdapterError, Completion, ModelSpec, TokenLogprob, Usage};
use crate::hash::sha256_hex;
use crate::math::ln;
use crate::metrics::hashed_tf_vector;
use crate::wire::{
    ChatChoice, ChatLogprobEntry, ChatLogprobs, ChatMessage, ChatRequest, ChatResponse, CompletionChoice,
    CompletionResponse, EchoLogprobs, EmbeddingDatum, EmbeddingRequest, EmbeddingResponse, ScoreRequest, WireUsage,
    CHAT_PATH, COMPLETIONS_PATH, EMBEDDINGS_PATH,
};

/// Number of tokens echoed back when no fixture matches.
pub const DEFAULT_ECHO_TOKENS: usize = 32;

pub type NllFn = Arc<dyn Fn(&str, &str) -> f64 + Send + Sync>;

/// A mock model whose output is a pure function of the prompt and the
/// fixture set.
///
/// Fixture keys are the SHA-256 hex digest of the prompt. Without a
/// matching fixture the response is the first 32 whitespace tokens of the
/// prompt's last non-empty line. Log-probabilities are uniform over a
/// vocabulary of `vocab_size` tokens unless an NLL function is supplied.
#[derive(Clone)]
pub struct MockAdapter {
    fixtures: BTreeMap<String, String>,
    failures: BTreeMap<String, AdapterError>,
    capability: AdapterCapability,
    vocab_size: u32,
    embed_dim: usize,
    nll: Option<NllFn>,
}

impl core::fmt::Debug for MockAdapter {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MockAdapter")
            .field("fixtures", &self.fixtures.len())
            .field("failures", &self.failures.len())
            .field("capability", &self.capability)
            .field("vocab_size", &self.vocab_size)
            .field("embed_dim", &self.embed_dim)
            .field("custom_nll", &self.nll.is_some())
            .finish()
    }
}

impl Default for MockAdapter {
    fn default() -> Self {
        MockAdapter {
            fixtures: BTreeMap::new(),
            failures: BTreeMap::new(),
            capability: AdapterCapability { supports_logprobs: true, supports_seed: true, supports_embeddings: true },
            vocab_size: 16,
            embed_dim: 64,
            nll: None,
        }
    }
}

pub fn prompt_key(prompt: &str) -> String {
    sha256_hex(prompt.as_bytes())
}

/// First [`DEFAULT_ECHO_TOKENS`] whitespace tokens of the last non-empty
/// line of `prompt`.
pub fn default_response(prompt: &str) -> String {
    let line = prompt.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut out = String::new();
    for (i, tok) in line.split_whitespace().take(DEFAULT_ECHO_TOKENS).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

impl MockAdapter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Responds with `response` whenever the prompt is exactly `prompt`.
    pub fn with_fixture(mut self, prompt: &str, response: impl Into<String>) -> Self {
        self.fixtures.insert(prompt_key(prompt), response.into());
        self
    }

    /// Like [`with_fixture`](Self::with_fixture) with a precomputed key.
    pub fn with_fixture_key(mut self, key: impl Into<String>, response: impl Into<String>) -> Self {
        self.fixtures.insert(key.into(), response.into());
        self
    }

    /// Fails every call whose prompt is exactly `prompt`.
    pub fn fail_on(mut self, prompt: &str, error: AdapterError) -> Self {
        self.failures.insert(prompt_key(prompt), error);
        self
    }

    pub fn with_capability(mut self, capability: AdapterCapability) -> Self {
        self.capability = capability;
        self
    }

    pub fn without_logprobs(mut self) -> Self {
        self.capability.supports_logprobs = false;
        self
    }

    pub fn with_vocab_size(mut self, vocab_size: u32) -> Self {
        self.vocab_size = vocab_size.max(1);
        self
    }

    pub fn with_embed_dim(mut self, dim: usize) -> Self {
        self.embed_dim = dim.max(1);
        self
    }

    /// Replaces the uniform NLL with `f(prompt, reference)`.
    pub fn with_nll(mut self, f: impl Fn(&str, &str) -> f64 + Send + Sync + 'static) -> Self {
        self.nll = Some(Arc::new(f));
        self
    }

    pub fn fixture_count(&self) -> usize {
        self.fixtures.len()
    }

    fn uniform_logprob(&self) -> f64 {
        -ln(f64::from(self.vocab_size))
    }

    fn check_failure(&self, prompt: &str) -> Result<(), AdapterError> {
        match self.failures.get(&prompt_key(prompt)) {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    fn response_text(&self, prompt: &str) -> String {
        match self.fixtures.get(&prompt_key(prompt)) {
            Some(r) => r.clone(),
            None => default_response(prompt),
        }
    }

    /// Answers an OpenAI-shaped request as an endpoint would, so the HTTP
    /// client can be exercised without a network.
    pub fn respond(&self, path: &str, body: &Value) -> Result<Value, AdapterError> {
        let bad = |e: serde_json::Error| AdapterError::Endpoint { status: 400, body: e.to_string() };
        let out = match path {
            CHAT_PATH => {
                let req: ChatRequest = serde_json::from_value(body.clone()).map_err(bad)?;
                let prompt = req.prompt();
                self.check_failure(prompt)?;
                let text = self.response_text(prompt);
                let logprobs = (req.logprobs && self.capability.supports_logprobs).then(|| ChatLogprobs {
                    content: Some(
                        text.split_whitespace()
                            .map(|t| ChatLogprobEntry { token: t.into(), logprob: self.uniform_logprob() })
                            .collect(),
                    ),
                });
                let resp = ChatResponse {
                    model: req.model.clone(),
                    usage: Some(WireUsage {
                        prompt_tokens: prompt.split_whitespace().count() as u64,
                        completion_tokens: text.split_whitespace().count() as u64,
                    }),
                    choices: vec![ChatChoice {
                        index: 0,
                        message: ChatMessage { role: "assistant".into(), content: text },
                        logprobs,
                        finish_reason: Some("stop".into()),
                    }],
                };
                serde_json::to_value(resp)
            }
            COMPLETIONS_PATH => {
                if !self.capability.supports_logprobs {
                    return Err(AdapterError::Endpoint { status: 400, body: "logprobs not supported".into() });
                }
                let req: ScoreRequest = serde_json::from_value(body.clone()).map_err(bad)?;
                serde_json::to_value(CompletionResponse {
                    choices: vec![CompletionChoice {
                        text: req.prompt.clone(),
                        logprobs: Some(self.echo(&req.prompt)),
                    }],
                })
            }
            EMBEDDINGS_PATH => {
                if !self.capability.supports_embeddings {
                    return Err(AdapterError::Endpoint { status: 400, body: "embeddings not supported".into() });
                }
                let req: EmbeddingRequest = serde_json::from_value(body.clone()).map_err(bad)?;
                serde_json::to_value(EmbeddingResponse {
                    data: vec![EmbeddingDatum { embedding: hashed_tf_vector(&req.input, self.embed_dim) }],
                })
            }
            other => return Err(AdapterError::Endpoint { status: 404, body: other.into() }),
        };
        out.map_err(|e| AdapterError::protocol(e.to_string()))
    }

    /// Whitespace-token echo with character offsets. The first token has
    /// no logprob, as real endpoints report.
    fn echo(&self, text: &str) -> EchoLogprobs {
        let mut out = EchoLogprobs::default();
        let mut start: Option<usize> = None;
        let mut token = String::new();
        for (chars, ch) in text.chars().chain(core::iter::once(' ')).enumerate() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    out.token_logprobs.push(if out.tokens.is_empty() { None } else { Some(self.uniform_logprob()) });
                    out.tokens.push(core::mem::take(&mut token));
                    out.text_offset.push(s);
                }
            } else {
                if start.is_none() {
                    start = Some(chars);
                }
                token.push(ch);
            }
        }
        out
    }
}

impl Adapter for MockAdapter {
    fn capability(&self) -> AdapterCapability {
        self.capability
    }

    fn complete(&self, spec: &ModelSpec, prompt: &str) -> Result<Completion, AdapterError> {
        self.check_failure(prompt)?;
        let text = self.response_text(prompt);
        let token_logprobs = (spec.want_logprobs && self.capability.supports_logprobs).then(|| {
            text.split_whitespace().map(|t| TokenLogprob { token: t.into(), logprob: self.uniform_logprob() }).collect()
        });
        let usage = Usage {
            prompt_tokens: prompt.split_whitespace().count() as u64,
            completion_tokens: text.split_whitespace().count() as u64,
        };
        Ok(Completion { text, token_logprobs, latency_ms: 0, usage })
    }

    fn score_reference_nll(&self, _spec: &ModelSpec, prompt: &str, reference: &str) -> Result<f64, AdapterError> {
        if !self.capability.supports_logprobs {
            return Err(AdapterError::missing("logprobs"));
        }
        if reference.trim().is_empty() {
            return Err(AdapterError::EmptyReference);
        }
        self.check_failure(prompt)?;
        if let Some(f) = &self.nll {
            return Ok(f(prompt, reference));
        }
        let n = reference.split_whitespace().count();
        let total: f64 = (0..n).map(|_| -self.uniform_logprob()).sum();
        Ok(total / n as f64)
    }

    fn embed(&self, _spec: &ModelSpec, text: &str) -> Result<Vec<f64>, AdapterError> {
        if !self.capability.supports_embeddings {
            return Err(AdapterError::missing("embeddings"));
        }
        Ok(hashed_tf_vector(text, self.embed_dim))
    }
}
