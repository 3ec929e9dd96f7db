//! Loading suites, templates, model files, policies, lexicons, and scored
//! examples from disk.

use std::fs;
use std::path::Path;

use genaiops_core::adapter::{AdapterCapability, ModelSpec};
use genaiops_core::fairness::ScoredExample;
use genaiops_core::optimizer::ApeConfig;
use genaiops_core::pipeline::GatePolicy;
use genaiops_core::safety::Lexicon;
use genaiops_core::suite::{parse_suite, PromptTemplate, Suite};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{GateError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| GateError::Read { path: path.into(), source })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| GateError::parse(path, e))
}

pub fn load_suite(path: &Path) -> Result<Suite> {
    parse_suite(&read_text(path)?).map_err(|e| GateError::parse(path, e))
}

/// A template file is either a JSON template document or plain text used
/// as the template body.
pub fn load_template(path: &Path) -> Result<PromptTemplate> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        if let Ok(t) = serde_json::from_str::<PromptTemplate>(&text) {
            return Ok(t);
        }
    }
    Ok(PromptTemplate::new(text))
}

fn default_in_flight() -> usize {
    4
}

/// A model file: the model spec plus what the endpoint supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: ModelSpec,
    #[serde(default = "default_capability")]
    pub capability: AdapterCapability,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_capability() -> AdapterCapability {
    AdapterCapability { supports_logprobs: false, supports_seed: true, supports_embeddings: false }
}

impl ModelFile {
    pub fn new(model: ModelSpec) -> Self {
        ModelFile { model, capability: default_capability(), max_in_flight: default_in_flight() }
    }
}

/// Accepts a [`ModelFile`] or a bare model spec.
pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| GateError::parse(path, e))?;
    if value.get("model").is_some_and(|m| m.is_object()) {
        serde_json::from_value(value).map_err(|e| GateError::parse(path, e))
    } else {
        serde_json::from_value(value).map(ModelFile::new).map_err(|e| GateError::parse(path, e))
    }
}

pub fn load_policy(path: &Path) -> Result<GatePolicy> {
    let policy: GatePolicy = read_json(path)?;
    policy.validate().map_err(|e| GateError::parse(path, e))?;
    Ok(policy)
}

pub fn load_ape_config(path: &Path) -> Result<ApeConfig> {
    read_json(path)
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    Ok(Lexicon::parse(&read_text(path)?))
}

/// Line-delimited JSON records; blank lines are skipped and errors carry the
/// line number.
pub fn parse_jsonl<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| GateError::parse(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoredExample>> {
    parse_jsonl(path, &read_text(path)?)
}

/// One mock fixture: the exact prompt (or its SHA-256 key) and the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureLine {
    #[serde(default)]
    pub prompt: Option<String>,
    #[serde(default)]
    pub key: Option<String>,
    pub response: String,
}

pub fn load_fixtures(path: &Path) -> Result<Vec<FixtureLine>> {
    let lines: Vec<FixtureLine> = parse_jsonl(path, &read_text(path)?)?;
    if let Some(bad) = lines.iter().position(|l| l.prompt.is_none() == l.key.is_none()) {
        return Err(GateError::parse(path, format!("fixture {} needs exactly one of prompt or key", bad + 1)));
    }
    Ok(lines)
}
