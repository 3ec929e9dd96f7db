use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Run, RunRecord};
use crate::fairness::DisparityReport;
use crate::metrics::MetricId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub baseline_mean: f64,
    pub candidate_mean: f64,
    /// `candidate_mean - baseline_mean`.
    pub delta: f64,
    /// Cases scored in both runs.
    pub n_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDelta {
    pub case_id: String,
    pub baseline: BTreeMap<MetricId, f64>,
    pub candidate: BTreeMap<MetricId, f64>,
    pub deltas: BTreeMap<MetricId, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyDelta {
    pub baseline_pii_out: usize,
    pub candidate_pii_out: usize,
    pub pii_out_delta: i64,
    pub baseline_pii_in: usize,
    pub candidate_pii_in: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_hap_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_hap_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDelta {
    pub baseline: Vec<String>,
    pub candidate: Vec<String>,
    /// Cases that failed in the candidate but not in the baseline.
    pub new_in_candidate: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessDelta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<DisparityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<DisparityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline_run: String,
    pub candidate_run: String,
    pub baseline_model: String,
    pub candidate_model: String,
    pub suite_hash: String,
    pub metric_config_hash: String,
    pub tolerance: f64,
    pub metrics: BTreeMap<MetricId, MetricDelta>,
    pub cases: Vec<CaseDelta>,
    /// Cases whose delta is below `-tolerance`, per metric.
    pub regressed: BTreeMap<MetricId, Vec<String>>,
    pub safety: SafetyDelta,
    pub errors: ErrorDelta,
    pub fairness: FairnessDelta,
}

impl Comparison {
    /// Case ids regressed beyond `tolerance` on `metric`.
    pub fn regressed_beyond(&self, metric: MetricId, tolerance: f64) -> Vec<&str> {
        self.cases
            .iter()
            .filter(|c| c.deltas.get(&metric).is_some_and(|d| *d < -tolerance))
            .map(|c| c.case_id.as_str())
            .collect()
    }
}

fn values(r: &RunRecord) -> BTreeMap<MetricId, f64> {
    r.metrics.iter().map(|(k, v)| (*k, v.value)).collect()
}

/// Pairs the two runs case by case. Means are over the cases scored in both
/// runs, in case-id order, so swapping the runs negates every delta.
pub fn compare_runs(baseline: &Run, candidate: &Run, tolerance: f64) -> Result<Comparison, CompareError> {
    let (bm, cm) = (&baseline.manifest, &candidate.manifest);
    if bm.suite_hash != cm.suite_hash {
        return Err(CompareError::IncomparableRuns(alloc::format!(
            "suite hash {} differs from {}",
            bm.suite_hash,
            cm.suite_hash
        )));
    }
    if bm.metric_config_hash != cm.metric_config_hash {
        return Err(CompareError::IncomparableRuns(alloc::format!(
            "metric config hash {} differs from {}",
            bm.metric_config_hash,
            cm.metric_config_hash
        )));
    }
    let cand: BTreeMap<&str, &RunRecord> = candidate.records.iter().map(|r| (r.case_id.as_str(), r)).collect();
    let base: BTreeMap<&str, &RunRecord> = baseline.records.iter().map(|r| (r.case_id.as_str(), r)).collect();
    if cand.len() != base.len() || base.keys().any(|k| !cand.contains_key(k)) {
        return Err(CompareError::IncomparableRuns("case sets differ".into()));
    }

    let mut cases = Vec::new();
    let mut sums: BTreeMap<MetricId, (f64, f64, usize)> = BTreeMap::new();
    for (id, b) in &base {
        let c = cand[id];
        let bv = values(b);
        let cv = values(c);
        let mut deltas = BTreeMap::new();
        for (m, x) in &bv {
            if let Some(y) = cv.get(m) {
                deltas.insert(*m, y - x);
                let e = sums.entry(*m).or_insert((0.0, 0.0, 0));
                e.0 += x;
                e.1 += y;
                e.2 += 1;
            }
        }
        cases.push(CaseDelta { case_id: (*id).into(), baseline: bv, candidate: cv, deltas });
    }
    let metrics: BTreeMap<MetricId, MetricDelta> = sums
        .into_iter()
        .map(|(m, (sb, sc, n))| {
            let (b, c) = (sb / n as f64, sc / n as f64);
            (m, MetricDelta { baseline_mean: b, candidate_mean: c, delta: c - b, n_cases: n })
        })
        .collect();
    let mut regressed: BTreeMap<MetricId, Vec<String>> = BTreeMap::new();
    for c in &cases {
        for (m, d) in &c.deltas {
            if *d < -tolerance {
                regressed.entry(*m).or_default().push(c.case_id.clone());
            }
        }
    }

    let bs = baseline.summary();
    let cs = candidate.summary();
    let failed = |run: &Run| -> Vec<String> {
        run.records.iter().filter(|r| r.error.is_some()).map(|r| r.case_id.clone()).collect()
    };
    let (be, ce) = (failed(baseline), failed(candidate));
    let new_in_candidate = ce.iter().filter(|id| !be.contains(id)).cloned().collect();

    Ok(Comparison {
        baseline_run: bm.run_id.clone(),
        candidate_run: cm.run_id.clone(),
        baseline_model: bm.model.id.clone(),
        candidate_model: cm.model.id.clone(),
        suite_hash: bm.suite_hash.clone(),
        metric_config_hash: bm.metric_config_hash.clone(),
        tolerance,
        metrics,
        cases,
        regressed,
        safety: SafetyDelta {
            baseline_pii_out: bs.pii_out,
            candidate_pii_out: cs.pii_out,
            pii_out_delta: cs.pii_out as i64 - bs.pii_out as i64,
            baseline_pii_in: bs.pii_in,
            candidate_pii_in: cs.pii_in,
            baseline_hap_max: bs.hap_out_max,
            candidate_hap_max: cs.hap_out_max,
        },
        errors: ErrorDelta { baseline: be, candidate: ce, new_in_candidate },
        fairness: FairnessDelta { baseline: bs.fairness, candidate: cs.fairness },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::MockAdapter;
    use crate::pipeline::fixtures;

    #[test]
    fn identical_runs_have_zero_deltas() {
        let s = fixtures::suite(4);
        let a = fixtures::run("a", &s, &MockAdapter::new());
        let b = fixtures::run("b", &s, &MockAdapter::new());
        let cmp = compare_runs(&a, &b, 0.0).unwrap();
        assert!(cmp.metrics.values().all(|d| d.delta == 0.0));
        assert!(cmp.regressed.is_empty());
    }

    #[test]
    fn single_case_drop_is_isolated() {
        let s = fixtures::suite(4);
        let a = fixtures::run("a", &s, &MockAdapter::new());
        let mut b = fixtures::run("b", &s, &MockAdapter::new());
        b.records[2].metrics.get_mut(&MetricId::Rouge1).unwrap().value -= 0.3;
        let cmp = compare_runs(&a, &b, 0.1).unwrap();
        assert_eq!(cmp.regressed[&MetricId::Rouge1], ["c02"]);
        let d = cmp.metrics[&MetricId::Rouge1].delta;
        assert!((d - (-0.3 / 4.0)).abs() < 1e-12);
        let back = compare_runs(&b, &a, 0.1).unwrap();
        for (m, v) in &cmp.metrics {
            assert_eq!(back.metrics[m].delta, -v.delta);
        }
    }

    #[test]
    fn different_suites_are_incomparable() {
        let a = fixtures::run("a", &fixtures::suite(3), &MockAdapter::new());
        let b = fixtures::run("b", &fixtures::suite(4), &MockAdapter::new());
        assert!(matches!(compare_runs(&a, &b, 0.0), Err(CompareError::IncomparableRuns(_))));
    }
}
