use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_capability, score_prompt, OptimizerError, Scorer};
use crate::adapter::{Adapter, ModelSpec};
use crate::math::mean_std;
use crate::metrics::MetricConfig;
use crate::suite::{render_prompt, select_demos, DemoStrategy, PromptTemplate, Suite};

/// Mean and population standard deviation of per-case scores at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub mean: f64,
    pub stddev: f64,
    pub n_cases: usize,
}

/// Scores the suite once per demo count. For every case, `k` random demos
/// (never the case itself) are injected, the prompt is rendered, and the
/// case is scored; NLL scores are reported as is. Repeated `k` values are
/// evaluated once.
pub fn few_shot_sweep(
    suite: &Suite,
    ks: &[usize],
    template: &PromptTemplate,
    model: (&dyn Adapter, &ModelSpec),
    scorer: Scorer,
    seed: u64,
    config: &MetricConfig,
) -> Result<Vec<SweepPoint>, OptimizerError> {
    if ks.is_empty() {
        return Err(OptimizerError::InvalidConfig("no demo counts to sweep".into()));
    }
    if suite.is_empty() {
        return Err(OptimizerError::EmptySuite);
    }
    let (adapter, spec) = model;
    check_capability(adapter, scorer)?;
    let cases = suite.sorted_cases();
    let mut points: Vec<SweepPoint> = Vec::new();
    for &k in ks {
        if points.iter().any(|p| p.k == k) {
            continue;
        }
        let mut scores = Vec::with_capacity(cases.len());
        for case in &cases {
            let demos = select_demos(suite, k, DemoStrategy::Random, seed, &case.id);
            let prompt = render_prompt(template, case, &demos)?;
            scores.push(score_prompt(adapter, spec, case, &prompt, scorer, config)?);
        }
        let (mean, stddev) = mean_std(&scores);
        points.push(SweepPoint { k, mean, stddev, n_cases: scores.len() });
    }
    Ok(points)
}
