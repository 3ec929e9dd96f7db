use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Comparison;
use crate::metrics::MetricId;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_mean_drop: Option<f64>,
    /// How many cases may regress beyond the tolerance. Unset means none
    /// may.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_case_regressions: Option<usize>,
    #[serde(default)]
    pub per_case_drop_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyRule {
    /// Total PII findings allowed in candidate outputs.
    #[serde(default)]
    pub max_pii_findings: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_hap_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tpr_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fpr_gap: Option<f64>,
}

/// Thresholds a candidate run must meet relative to its baseline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatePolicy {
    #[serde(default)]
    pub metrics: BTreeMap<MetricId, MetricRule>,
    #[serde(default)]
    pub safety: SafetyRule,
    #[serde(default)]
    pub fairness: FairnessRule,
    #[serde(default)]
    pub warn_margin: f64,
    /// Cases allowed to fail in the candidate that succeeded in the
    /// baseline.
    #[serde(default)]
    pub max_new_errors: usize,
}

impl GatePolicy {
    /// Rejects non-finite or negative thresholds.
    pub fn validate(&self) -> Result<(), String> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(alloc::format!("{name} must be finite and non-negative, got {v}"))
            }
        };
        check("warn_margin", self.warn_margin)?;
        for (m, r) in &self.metrics {
            if let Some(v) = r.min_mean {
                if !v.is_finite() {
                    return Err(alloc::format!("{m}.min_mean must be finite"));
                }
            }
            if let Some(v) = r.max_mean_drop {
                check("max_mean_drop", v)?;
            }
            check("per_case_drop_tolerance", r.per_case_drop_tolerance)?;
        }
        if let Some(v) = self.safety.max_hap_score {
            check("max_hap_score", v)?;
        }
        if let Some(v) = self.fairness.max_tpr_gap {
            check("max_tpr_gap", v)?;
        }
        if let Some(v) = self.fairness.max_fpr_gap {
            check("max_fpr_gap", v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Warn => 2,
        }
    }
}

impl core::fmt::Display for Status {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Fail,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn failures(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Fail)
    }
}

struct Rules {
    margin: f64,
    out: Vec<Violation>,
}

impl Rules {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        rule: &str,
        severity: Severity,
        metric: Option<MetricId>,
        case_id: Option<&str>,
        b: Option<f64>,
        c: Option<f64>,
        t: f64,
    ) {
        self.out.push(Violation {
            rule: rule.into(),
            severity,
            metric,
            case_id: case_id.map(String::from),
            baseline: b,
            candidate: c,
            threshold: t,
        });
    }

    /// `value` must not exceed `limit`; a positive value within the margin
    /// of the limit warns.
    fn upper(&mut self, rule: &str, metric: Option<MetricId>, value: f64, limit: f64, b: Option<f64>, c: Option<f64>) {
        if value > limit {
            self.push(rule, Severity::Fail, metric, None, b, c, limit);
        } else if value > 0.0 && value > limit - self.margin {
            self.push(rule, Severity::Warn, metric, None, b, c, limit);
        }
    }
}

/// Evaluates every rule of `policy` against `comparison`. Rules whose input
/// is unavailable (a metric absent from both runs, fairness without
/// observations, HAP without a lexicon) fail.
pub fn gate(comparison: &Comparison, policy: &GatePolicy) -> Verdict {
    let mut r = Rules { margin: policy.warn_margin, out: Vec::new() };

    for (metric, rule) in &policy.metrics {
        let m = Some(*metric);
        let Some(d) = comparison.metrics.get(metric) else {
            r.push("metric_unavailable", Severity::Fail, m, None, None, None, 0.0);
            continue;
        };
        let (b, c) = (Some(d.baseline_mean), Some(d.candidate_mean));
        if let Some(min) = rule.min_mean {
            if d.candidate_mean < min {
                r.push("min_mean", Severity::Fail, m, None, b, c, min);
            } else if d.candidate_mean < min + policy.warn_margin {
                r.push("min_mean", Severity::Warn, m, None, b, c, min);
            }
        }
        if let Some(max_drop) = rule.max_mean_drop {
            r.upper("max_mean_drop", m, -d.delta, max_drop, b, c);
        }
        let allowed = rule.max_case_regressions.unwrap_or(0);
        let regressed = comparison.regressed_beyond(*metric, rule.per_case_drop_tolerance);
        let severity = if regressed.len() > allowed {
            Some(Severity::Fail)
        } else if !regressed.is_empty() && regressed.len() as f64 > allowed as f64 - policy.warn_margin {
            Some(Severity::Warn)
        } else {
            None
        };
        if let Some(sev) = severity {
            for id in regressed {
                let case = comparison.cases.iter().find(|c| c.case_id == id);
                let b = case.and_then(|c| c.baseline.get(metric).copied());
                let c = case.and_then(|c| c.candidate.get(metric).copied());
                r.push("case_regression", sev, m, Some(id), b, c, rule.per_case_drop_tolerance);
            }
        }
    }

    let s = &comparison.safety;
    let pii = s.candidate_pii_out as f64;
    r.upper(
        "max_pii_findings",
        None,
        pii,
        policy.safety.max_pii_findings as f64,
        Some(s.baseline_pii_out as f64),
        Some(pii),
    );
    if let Some(max) = policy.safety.max_hap_score {
        match s.candidate_hap_max {
            Some(h) => r.upper("max_hap_score", None, h, max, s.baseline_hap_max, Some(h)),
            None => r.push("hap_unavailable", Severity::Fail, None, None, None, None, max),
        }
    }

    let f = &policy.fairness;
    for (rule, limit, pick) in [
        ("max_tpr_gap", f.max_tpr_gap, (|d: &crate::fairness::DisparityReport| d.tpr_gap) as fn(&_) -> Option<f64>),
        ("max_fpr_gap", f.max_fpr_gap, |d| d.fpr_gap),
    ] {
        let Some(limit) = limit else { continue };
        let b = comparison.fairness.baseline.as_ref().and_then(pick);
        match comparison.fairness.candidate.as_ref().and_then(pick) {
            Some(gap) => r.upper(rule, None, gap, limit, b, Some(gap)),
            None => r.push(rule, Severity::Fail, None, None, b, None, limit),
        }
    }

    let new_errors = comparison.errors.new_in_candidate.len();
    if new_errors > policy.max_new_errors {
        for id in &comparison.errors.new_in_candidate {
            r.push("new_error", Severity::Fail, None, Some(id), None, None, policy.max_new_errors as f64);
        }
    }

    let status = if r.out.iter().any(|v| v.severity == Severity::Fail) {
        Status::Fail
    } else if r.out.is_empty() {
        Status::Pass
    } else {
        Status::Warn
    };
    Verdict { status, violations: r.out }
}
