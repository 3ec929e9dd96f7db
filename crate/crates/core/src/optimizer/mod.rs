//! Automatic prompt engineering and few-shot injection sweeps.

mod ape;
mod compat;
mod sweep;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use ape::{
    ape_search, propose_instructions, score_instruction, ApeConfig, ApeResult, InstructionCandidate, Provenance,
    RoundLog,
};
pub use compat::{compatibility_matrix, Cell, CompatibilityMatrix, ModelRow, PairwiseWins};
pub use sweep::{few_shot_sweep, SweepPoint};

use crate::adapter::{Adapter, AdapterError, ModelSpec};
use crate::metrics::{MetricConfig, MetricError, MetricId};
use crate::pipeline::case_metric;
use crate::suite::{RenderError, TestCase};

/// How a prompt is scored: by a metric of the completion, or by the
/// reference NLL under the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Metric(MetricId),
    Nll,
}

impl Scorer {
    pub fn needs_logprobs(self) -> bool {
        matches!(self, Scorer::Nll)
    }
}

impl core::fmt::Display for Scorer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Scorer::Metric(m) => write!(f, "metric:{m}"),
            Scorer::Nll => f.write_str("nll"),
        }
    }
}

impl core::str::FromStr for Scorer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "nll" {
            return Ok(Scorer::Nll);
        }
        let id = s.strip_prefix("metric:").ok_or_else(|| alloc::format!("unknown scorer `{s}`"))?;
        id.parse::<MetricId>().map(Scorer::Metric).map_err(|e| e.to_string())
    }
}

impl Serialize for Scorer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scorer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("every proposal was empty")]
    EmptyProposal,
    #[error("no evaluation cases")]
    EmptyEvalSet,
    #[error("suite is empty")]
    EmptySuite,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("at least two models are required")]
    TooFewModels,
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("case `{case}`: {source}")]
    Metric { case: String, source: MetricError },
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// The reference a case is scored against by NLL.
pub(crate) fn nll_reference(case: &TestCase) -> String {
    case.demo().output
}

/// Scores one prompt for one case. NLL scores are returned as is (lower is
/// better).
pub(crate) fn score_prompt(
    adapter: &dyn Adapter,
    spec: &ModelSpec,
    case: &TestCase,
    prompt: &str,
    scorer: Scorer,
    config: &MetricConfig,
) -> Result<f64, OptimizerError> {
    match scorer {
        Scorer::Nll => Ok(adapter.score_reference_nll(spec, prompt, &nll_reference(case))?),
        Scorer::Metric(id) => {
            let c = adapter.complete(spec, prompt)?;
            case_metric(case, id, &c.text, config)
                .map(|v| v.value)
                .map_err(|source| OptimizerError::Metric { case: case.id.clone(), source })
        }
    }
}

/// Mean of `values` summed in the given order.
pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub(crate) fn check_capability(adapter: &dyn Adapter, scorer: Scorer) -> Result<(), OptimizerError> {
    if scorer.needs_logprobs() && !adapter.capability().supports_logprobs {
        return Err(AdapterError::missing("logprobs").into());
    }
    Ok(())
}

/// First non-empty line, trimmed.
pub(crate) fn first_line(text: &str) -> Option<String> {
    text.lines().map(str::trim).find(|l| !l.is_empty()).map(String::from)
}

pub(crate) fn sorted<'a>(cases: impl IntoIterator<Item = &'a TestCase>) -> Vec<&'a TestCase> {
    let mut v: Vec<&TestCase> = cases.into_iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}
