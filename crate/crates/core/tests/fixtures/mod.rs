//! Scripted models and suites shared by integration tests.

#![allow(dead_code)]

use std::sync::Mutex;

use genaiops_core::adapter::{AdapterCapability, AdapterError, ModelSpec};
use genaiops_core::mock::MockAdapter;
use genaiops_core::suite::{parse_suite, Suite};
use genaiops_core::transport::{CacheEntry, Exchange, ReplayTransport, Transport, WireAdapter};
use genaiops_core::wire::{cache_key, CHAT_PATH};
use serde_json::Value;

pub fn spec() -> ModelSpec {
    ModelSpec::new("m", "mock://", "m")
}

/// `n` summarization cases whose reference equals the source.
pub fn echo_suite(n: usize) -> Suite {
    let text: String = (0..n)
        .map(|i| {
            format!(
                "{{\"id\":\"c{i:02}\",\"task\":\"summarization\",\"source\":\"alpha beta gamma {i}\",\"references\":[\"alpha beta gamma {i}\"]}}\n"
            )
        })
        .collect();
    parse_suite(&text).unwrap()
}

/// Number of demonstrations rendered with the default demo format.
pub fn demos_in(prompt: &str) -> usize {
    prompt.matches("Input: ").count()
}

/// `0.5 + 0.1 (k - 3)^2`, lowest at three demos.
pub fn u_shaped(k: usize) -> f64 {
    let d = k as f64 - 3.0;
    0.5 + 0.1 * d * d
}

pub fn u_shaped_mock() -> MockAdapter {
    MockAdapter::new().with_nll(|prompt, _| u_shaped(demos_in(prompt)))
}

pub const CANDIDATES: [&str; 8] = [
    "Summarize the text.",
    "Repeat the input exactly.",
    "Write one short sentence.",
    "Copy the passage word for word.",
    "Translate to French.",
    "List the key entities.",
    "Answer the question briefly.",
    "Echo what you read.",
];

/// Pseudo-random NLL in `[0.5, 1.5)` fixed by the instruction text.
pub fn instruction_nll(text: &str) -> f64 {
    let h = text.bytes().fold(17u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
    0.5 + (h % 1000) as f64 / 1000.0
}

pub fn instruction_scorer() -> MockAdapter {
    MockAdapter::new().with_nll(|prompt, _| instruction_nll(prompt.lines().next().unwrap_or("")))
}

/// Answers proposal requests with `CANDIDATES[seed - base]` and resample
/// requests with a numbered variant of the parent, recording every exchange.
pub struct ProposalScript {
    pub base_seed: u64,
    pub log: Mutex<Vec<CacheEntry>>,
}

impl ProposalScript {
    pub fn new(base_seed: u64) -> Self {
        ProposalScript { base_seed, log: Mutex::new(Vec::new()) }
    }

    pub fn replay(&self) -> WireAdapter<ReplayTransport> {
        WireAdapter::new(ReplayTransport::new(self.log.lock().unwrap().clone()), caps())
    }
}

impl Transport for &ProposalScript {
    fn send(&self, spec: &ModelSpec, path: &str, body: &Value) -> Result<Exchange, AdapterError> {
        (*self).send(spec, path, body)
    }
}

pub fn caps() -> AdapterCapability {
    AdapterCapability { supports_logprobs: true, supports_seed: true, supports_embeddings: false }
}

impl Transport for ProposalScript {
    fn send(&self, _spec: &ModelSpec, path: &str, body: &Value) -> Result<Exchange, AdapterError> {
        assert_eq!(path, CHAT_PATH);
        let prompt = body["messages"][0]["content"].as_str().unwrap();
        let seed = body["seed"].as_u64().unwrap();
        let text = match prompt.split_once("meaning:\n") {
            Some((_, parent)) => format!("{parent} (v{}.{})", seed >> 32, seed & 0xffff_ffff),
            None => CANDIDATES[(seed - self.base_seed) as usize].to_string(),
        };
        let response = MockAdapter::new().with_fixture(prompt, text).respond(path, body)?;
        self.log.lock().unwrap().push(CacheEntry { key: cache_key(body), response: response.clone(), latency_ms: 0 });
        Ok(Exchange { response, latency_ms: 0 })
    }
}

use genaiops_core::metrics::MetricConfig;
use genaiops_core::pipeline::{evaluate_case, AdapterMode, Run, RunManifest, SafetyContext};
use genaiops_core::suite::FewShotConfig;

pub fn manifest(run_id: &str, suite: &Suite) -> RunManifest {
    let config = MetricConfig::default();
    RunManifest {
        run_id: run_id.into(),
        created_at: "2026-01-01T00:00:00Z".into(),
        model: spec(),
        suite_hash: suite.hash.clone(),
        template_hash: "t".into(),
        metric_config_hash: config.hash(),
        metric_config: config,
        fewshot: FewShotConfig::default(),
        adapter_mode: AdapterMode::Mock,
        privileged_segment: suite.privileged.clone(),
        lexicon_id: None,
        n_cases: suite.len(),
    }
}

/// Evaluates every case with its source as the prompt.
pub fn mock_run(run_id: &str, suite: &Suite, adapter: &MockAdapter) -> Run {
    let records = suite
        .cases
        .iter()
        .map(|c| {
            evaluate_case(c, c.source.clone(), adapter, &spec(), &MetricConfig::default(), &SafetyContext::default())
        })
        .collect();
    Run::new(manifest(run_id, suite), records)
}

use genaiops_core::fairness::{Group, ScoredExample};

/// Spreads `n` scores evenly over one side of 0.5.
fn side(g: Group, y: bool, above: bool, n: usize, out: &mut Vec<ScoredExample>) {
    for i in 0..n {
        let frac = (i as f64 + 0.5) / n as f64;
        let s = if above { 0.5 + 0.5 * frac } else { 0.5 * frac };
        out.push(ScoredExample::new(s, g, y));
    }
}

/// 10,000 examples. Privileged: base rate 0.4, TPR 0.8, FPR 0.1.
/// Unprivileged: base rate 0.2, TPR 0.6, FPR 0.2.
pub fn ten_thousand() -> Vec<ScoredExample> {
    let mut v = Vec::new();
    side(Group::Privileged, true, true, 1600, &mut v);
    side(Group::Privileged, true, false, 400, &mut v);
    side(Group::Privileged, false, true, 300, &mut v);
    side(Group::Privileged, false, false, 2700, &mut v);
    side(Group::Unprivileged, true, true, 600, &mut v);
    side(Group::Unprivileged, true, false, 400, &mut v);
    side(Group::Unprivileged, false, true, 800, &mut v);
    side(Group::Unprivileged, false, false, 3200, &mut v);
    v
}

/// Perfectly calibrated levels: at score `s`, a fraction `s` is positive.
pub fn calibrated(g: Group, levels: &[f64], per_level: usize) -> Vec<ScoredExample> {
    let mut v = Vec::new();
    for &s in levels {
        let pos = (s * per_level as f64).round() as usize;
        v.extend((0..pos).map(|_| ScoredExample::new(s, g, true)));
        v.extend((pos..per_level).map(|_| ScoredExample::new(s, g, false)));
    }
    v
}

/// 100,000 calibrated examples per group.
pub fn calibrated_pair() -> Vec<ScoredExample> {
    let mut ex = calibrated(Group::Privileged, &[0.35, 0.65], 50_000);
    ex.extend(calibrated(Group::Unprivileged, &[0.45, 0.55], 50_000));
    ex
}

/// 32 evenly spaced scores in each group.
pub fn grid64() -> Vec<ScoredExample> {
    (0..32)
        .flat_map(|i| {
            let s = i as f64 / 31.0;
            [
                ScoredExample::new(s, Group::Privileged, i % 2 == 0),
                ScoredExample::new(s, Group::Unprivileged, i % 3 == 0),
            ]
        })
        .collect()
}

pub const PII_CORPUS: &str = include_str!("../data/pii_corpus.json");
