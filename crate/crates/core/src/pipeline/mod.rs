//! Runs, comparison of a candidate run against a baseline, gating, and
//! reports.

mod compare;
mod gate;
mod report;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use compare::{
    compare_runs, CaseDelta, CompareError, Comparison, ErrorDelta, FairnessDelta, MetricDelta, SafetyDelta,
};
pub use gate::{gate, FairnessRule, GatePolicy, MetricRule, SafetyRule, Severity, Status, Verdict, Violation};
pub use report::{report, Report, ReportFormat};

use crate::adapter::{Adapter, Completion, ModelSpec};
use crate::fairness::{disparity_report, DisparityReport, Group, ScoredExample};
use crate::metrics::{
    applicable_metrics, compute_metric, MetricConfig, MetricError, MetricId, MetricInput, MetricValue,
};
use crate::safety::{scan_hap, scan_pii, HapConfig, Lexicon};
use crate::suite::{FewShotConfig, TestCase};
use crate::text::normalize_answer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterMode {
    Live,
    Record,
    Replay,
    Mock,
}

impl AdapterMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AdapterMode::Live => "live",
            AdapterMode::Record => "record",
            AdapterMode::Replay => "replay",
            AdapterMode::Mock => "mock",
        }
    }
}

impl core::str::FromStr for AdapterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(AdapterMode::Live),
            "record" => Ok(AdapterMode::Record),
            "replay" => Ok(AdapterMode::Replay),
            "mock" => Ok(AdapterMode::Mock),
            other => Err(alloc::format!("unknown adapter mode `{other}`")),
        }
    }
}

/// Everything needed to tell whether two runs are comparable, plus the
/// exact metric constants the run was scored with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub created_at: String,
    pub model: ModelSpec,
    pub suite_hash: String,
    pub template_hash: String,
    pub metric_config_hash: String,
    pub metric_config: MetricConfig,
    pub fewshot: FewShotConfig,
    pub adapter_mode: AdapterMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privileged_segment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon_id: Option<String>,
    pub n_cases: usize,
}

/// Group membership and binary outcome of one case, for fairness checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessObs {
    pub segment: String,
    pub y_true: bool,
    pub y_pred: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case_id: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion: Option<Completion>,
    #[serde(default)]
    pub metrics: BTreeMap<MetricId, MetricValue>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metric_errors: BTreeMap<MetricId, String>,
    pub pii_in: usize,
    pub pii_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hap_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hap_out: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessObs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn output(&self) -> &str {
        self.completion.as_ref().map(|c| c.text.as_str()).unwrap_or("")
    }
}

/// A finalized run. Records are sorted by case id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub manifest: RunManifest,
    pub records: Vec<RunRecord>,
}

impl Run {
    pub fn new(manifest: RunManifest, mut records: Vec<RunRecord>) -> Self {
        records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        Run { manifest, records }
    }

    pub fn summary(&self) -> RunSummary {
        summarize(&self.records, self.manifest.privileged_segment.as_deref())
    }
}

/// Splits a completion into a label set: `;`- or newline-separated,
/// normalized, empty entries dropped.
pub fn parse_labels(text: &str) -> BTreeSet<String> {
    text.split([';', '\n']).map(normalize_answer).filter(|l| !l.is_empty()).collect()
}

/// Computes every metric applicable to `case` for `output`. Metrics that
/// cannot be computed (for instance readability of an empty output) are
/// returned separately.
pub fn case_metrics(
    case: &TestCase,
    output: &str,
    config: &MetricConfig,
) -> (BTreeMap<MetricId, MetricValue>, BTreeMap<MetricId, String>) {
    let mut values = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for id in applicable_metrics(case.task) {
        match case_metric(case, id, output, config) {
            Ok(v) => {
                values.insert(id, v);
            }
            Err(e) => {
                errors.insert(id, e.to_string());
            }
        }
    }
    (values, errors)
}

/// Computes one metric for `case`, enforcing applicability.
pub fn case_metric(
    case: &TestCase,
    id: MetricId,
    output: &str,
    config: &MetricConfig,
) -> Result<MetricValue, MetricError> {
    let predicted = parse_labels(output);
    let gold: Option<BTreeSet<String>> =
        case.labels.as_ref().map(|l| l.iter().map(|s| normalize_answer(s)).filter(|s| !s.is_empty()).collect());
    let input = MetricInput {
        source: &case.source,
        candidate: output,
        references: &case.references,
        predicted_labels: Some(&predicted),
        gold_labels: gold.as_ref(),
    };
    compute_metric(id, case.task, &input, config)
}

/// Reads the fairness observation of a case: it needs a `group` and a
/// `y_true` entry in metadata (bool or 0/1). The prediction is positive
/// when the normalized output is the metadata `positive_label` (default
/// "yes") or starts with it as a whole word.
pub fn fairness_obs(case: &TestCase, output: &str) -> Option<FairnessObs> {
    let segment = case.group.clone()?;
    let y_true = match case.metadata.get("y_true")? {
        serde_json::Value::Bool(b) => *b,
        serde_json::Value::Number(n) => match n.as_u64()? {
            0 => false,
            1 => true,
            _ => return None,
        },
        _ => return None,
    };
    let label = case.metadata.get("positive_label").and_then(|v| v.as_str()).unwrap_or("yes");
    let label = normalize_answer(label);
    let out = normalize_answer(output);
    let y_pred = !label.is_empty()
        && (out == label
            || out
                .strip_prefix(label.as_str())
                .is_some_and(|rest| rest.chars().next().is_some_and(|c| !c.is_alphanumeric())));
    Some(FairnessObs { segment, y_true, y_pred })
}

/// Optional safety resources used while evaluating.
#[derive(Debug, Clone, Copy, Default)]
pub struct SafetyContext<'a> {
    pub lexicon: Option<&'a Lexicon>,
    pub hap: HapConfig,
}

/// Evaluates one case from an already rendered prompt. Adapter failures are
/// captured in the record, never returned.
pub fn evaluate_case(
    case: &TestCase,
    prompt: String,
    adapter: &dyn Adapter,
    spec: &ModelSpec,
    config: &MetricConfig,
    safety: &SafetyContext<'_>,
) -> RunRecord {
    let hap = |text: &str| safety.lexicon.and_then(|l| scan_hap(text, Some(l), &safety.hap).ok()).map(|r| r.score);
    let mut record = RunRecord {
        case_id: case.id.clone(),
        pii_in: scan_pii(&prompt).len(),
        hap_in: hap(&prompt),
        prompt,
        completion: None,
        metrics: BTreeMap::new(),
        metric_errors: BTreeMap::new(),
        pii_out: 0,
        hap_out: None,
        fairness: None,
        error: None,
    };
    match adapter.complete(spec, &record.prompt) {
        Ok(c) => {
            let (metrics, errors) = case_metrics(case, &c.text, config);
            record.metrics = metrics;
            record.metric_errors = errors;
            record.pii_out = scan_pii(&c.text).len();
            record.hap_out = hap(&c.text);
            record.fairness = fairness_obs(case, &c.text);
            record.completion = Some(c);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Builds the record of a case whose prompt could not be rendered.
pub fn failed_record(case: &TestCase, error: impl ToString) -> RunRecord {
    RunRecord {
        case_id: case.id.clone(),
        prompt: String::new(),
        completion: None,
        metrics: BTreeMap::new(),
        metric_errors: BTreeMap::new(),
        pii_in: 0,
        pii_out: 0,
        hap_in: None,
        hap_out: None,
        fairness: None,
        error: Some(error.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_cases: usize,
    pub n_errors: usize,
    pub metrics: BTreeMap<MetricId, MetricSummary>,
    pub pii_in: usize,
    pub pii_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hap_out_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<DisparityReport>,
}

fn mean_in_order(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    (if n == 0 { 0.0 } else { sum / n as f64 }, n)
}

/// Disparity of the fairness observations in `records`. `None` without a
/// privileged segment or observations.
pub fn run_fairness(records: &[RunRecord], privileged: Option<&str>) -> Option<DisparityReport> {
    let privileged = privileged?;
    let mut examples = Vec::new();
    let mut labels = Vec::new();
    for obs in records.iter().filter_map(|r| r.fairness.as_ref()) {
        let group = if obs.segment == privileged { Group::Privileged } else { Group::Unprivileged };
        examples.push(ScoredExample::new(if obs.y_pred { 1.0 } else { 0.0 }, group, obs.y_true));
        labels.push(u8::from(obs.y_pred));
    }
    if examples.is_empty() {
        return None;
    }
    disparity_report(&examples, &labels).ok()
}

/// Aggregates records (assumed sorted by case id).
pub fn summarize(records: &[RunRecord], privileged: Option<&str>) -> RunSummary {
    let ids: BTreeSet<MetricId> = records.iter().flat_map(|r| r.metrics.keys().copied()).collect();
    let metrics = ids
        .into_iter()
        .map(|id| {
            let (mean, n) = mean_in_order(records.iter().filter_map(|r| r.metrics.get(&id)).map(|v| v.value));
            (id, MetricSummary { mean, n })
        })
        .collect();
    RunSummary {
        n_cases: records.len(),
        n_errors: records.iter().filter(|r| r.error.is_some()).count(),
        metrics,
        pii_in: records.iter().map(|r| r.pii_in).sum(),
        pii_out: records.iter().map(|r| r.pii_out).sum(),
        hap_out_max: records.iter().filter_map(|r| r.hap_out).reduce(f64::max),
        fairness: run_fairness(records, privileged),
    }
}
