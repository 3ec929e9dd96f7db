//! OpenAI-compatible request and response payloads, and the cache key
//! derived from a request.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::adapter::{AdapterError, Completion, ModelSpec, TokenLogprob, Usage};
use crate::hash::canonical_hash;

pub const CHAT_PATH: &str = "/v1/chat/completions";
pub const COMPLETIONS_PATH: &str = "/v1/completions";
pub const EMBEDDINGS_PATH: &str = "/v1/embeddings";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub logprobs: bool,
}

impl ChatRequest {
    pub fn new(spec: &ModelSpec, prompt: &str) -> Self {
        ChatRequest {
            model: spec.model_name.clone(),
            messages: vec![ChatMessage { role: "user".into(), content: prompt.into() }],
            temperature: spec.temperature,
            max_tokens: spec.max_tokens,
            seed: spec.seed,
            logprobs: spec.want_logprobs,
        }
    }

    /// The user prompt this request carries.
    pub fn prompt(&self) -> &str {
        self.messages.iter().rev().find(|m| m.role == "user").map(|m| m.content.as_str()).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatLogprobEntry {
    pub token: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ChatLogprobs {
    #[serde(default)]
    pub content: Option<Vec<ChatLogprobEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatChoice {
    #[serde(default)]
    pub index: u32,
    pub message: ChatMessage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<ChatLogprobs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct WireUsage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    #[serde(default)]
    pub model: String,
    pub choices: Vec<ChatChoice>,
    #[serde(default)]
    pub usage: Option<WireUsage>,
}

impl ChatResponse {
    /// Converts the first choice into a [`Completion`]. Log-probabilities are
    /// kept only when `keep_logprobs` is set.
    pub fn into_completion(self, latency_ms: u64, keep_logprobs: bool) -> Result<Completion, AdapterError> {
        let usage = self.usage.unwrap_or_default();
        let choice =
            self.choices.into_iter().next().ok_or_else(|| AdapterError::protocol("response has no choices"))?;
        let token_logprobs = if keep_logprobs {
            choice.logprobs.and_then(|l| l.content).map(|entries| {
                entries.into_iter().map(|e| TokenLogprob { token: e.token, logprob: e.logprob.min(0.0) }).collect()
            })
        } else {
            None
        };
        Ok(Completion {
            text: choice.message.content,
            token_logprobs,
            latency_ms,
            usage: Usage { prompt_tokens: usage.prompt_tokens, completion_tokens: usage.completion_tokens },
        })
    }
}

/// Teacher-forced scoring through the completions endpoint's echo mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model: String,
    pub prompt: String,
    pub max_tokens: u32,
    pub echo: bool,
    pub logprobs: u32,
    pub temperature: f64,
}

impl ScoreRequest {
    pub fn new(spec: &ModelSpec, prompt: &str, reference: &str) -> Self {
        let mut text = String::with_capacity(prompt.len() + reference.len());
        text.push_str(prompt);
        text.push_str(reference);
        ScoreRequest {
            model: spec.model_name.clone(),
            prompt: text,
            max_tokens: 0,
            echo: true,
            logprobs: 1,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EchoLogprobs {
    pub tokens: Vec<String>,
    pub token_logprobs: Vec<Option<f64>>,
    pub text_offset: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionChoice {
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub logprobs: Option<EchoLogprobs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub choices: Vec<CompletionChoice>,
}

impl CompletionResponse {
    /// Mean `-logprob` over echoed tokens that reach past the first
    /// `prompt_chars` characters. Offsets are in characters.
    pub fn reference_nll(&self, prompt_chars: usize) -> Result<f64, AdapterError> {
        let lp = self
            .choices
            .first()
            .and_then(|c| c.logprobs.as_ref())
            .ok_or_else(|| AdapterError::protocol("echo response carries no logprobs"))?;
        if lp.tokens.len() != lp.token_logprobs.len() || lp.tokens.len() != lp.text_offset.len() {
            return Err(AdapterError::protocol("logprob arrays differ in length"));
        }
        let mut sum = 0.0;
        let mut n = 0usize;
        for ((tok, lp), off) in lp.tokens.iter().zip(&lp.token_logprobs).zip(&lp.text_offset) {
            let end = off + tok.chars().count();
            if end <= prompt_chars {
                continue;
            }
            if let Some(v) = lp {
                sum += -v.min(0.0);
                n += 1;
            }
        }
        if n == 0 {
            return Err(AdapterError::protocol("no reference tokens in echo response"));
        }
        Ok(sum / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub model: String,
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDatum {
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub data: Vec<EmbeddingDatum>,
}

/// SHA-256 of the request payload serialized with sorted keys.
pub fn cache_key<T: Serialize>(payload: &T) -> String {
    canonical_hash(payload)
}
