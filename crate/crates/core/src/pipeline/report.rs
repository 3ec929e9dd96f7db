use alloc::string::String;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Comparison, Run, Severity, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl core::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(alloc::format!("unknown report format `{other}`")),
        }
    }
}

/// The machine-readable report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verdict: Verdict,
    pub comparison: Comparison,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => alloc::format!("{x:.4}"),
        None => "-".into(),
    }
}

/// Renders the verdict and comparison. The runs, when given, supply the
/// prompts and outputs quoted for regressed cases.
pub fn report(comparison: &Comparison, verdict: &Verdict, runs: Option<(&Run, &Run)>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let doc = Report { verdict: verdict.clone(), comparison: comparison.clone() };
            serde_json::to_string_pretty(&doc).expect("report serializes")
        }
        ReportFormat::Markdown => markdown(comparison, verdict, runs),
    }
}

fn markdown(cmp: &Comparison, verdict: &Verdict, runs: Option<(&Run, &Run)>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Regression gate: {}\n", verdict.status);
    let _ = writeln!(
        s,
        "Baseline `{}` ({}) vs candidate `{}` ({}).\n",
        cmp.baseline_run, cmp.baseline_model, cmp.candidate_run, cmp.candidate_model
    );

    s.push_str(
        "## Metrics\n\n| metric | baseline | candidate | delta | cases | regressed |\n|---|---|---|---|---|---|\n",
    );
    for (m, d) in &cmp.metrics {
        let regressed = cmp.regressed.get(m).map_or(0, |v| v.len());
        let _ = writeln!(
            s,
            "| {m} | {:.4} | {:.4} | {:+.4} | {} | {regressed} |",
            d.baseline_mean, d.candidate_mean, d.delta, d.n_cases
        );
    }

    let sd = &cmp.safety;
    let _ = writeln!(
        s,
        "\n## Safety\n\n| check | baseline | candidate |\n|---|---|---|\n| PII findings in outputs | {} | {} |\n| PII findings in prompts | {} | {} |\n| max HAP score | {} | {} |",
        sd.baseline_pii_out,
        sd.candidate_pii_out,
        sd.baseline_pii_in,
        sd.candidate_pii_in,
        fmt_opt(sd.baseline_hap_max),
        fmt_opt(sd.candidate_hap_max)
    );
    if let Some(f) = &cmp.fairness.candidate {
        let _ = writeln!(s, "\n## Fairness (candidate)\n\n| gap | value |\n|---|---|\n| TPR | {} |\n| FPR | {} |\n| selection rate | {} |",
            fmt_opt(f.tpr_gap), fmt_opt(f.fpr_gap), fmt_opt(f.selection_rate_gap));
    }
    if !cmp.errors.candidate.is_empty() || !cmp.errors.baseline.is_empty() {
        let _ = writeln!(
            s,
            "\n## Errors\n\nbaseline: {}, candidate: {}, new in candidate: {}",
            cmp.errors.baseline.len(),
            cmp.errors.candidate.len(),
            cmp.errors.new_in_candidate.join(", ")
        );
    }

    let _ = writeln!(s, "\n## Violations ({})\n", verdict.violations.len());
    if verdict.violations.is_empty() {
        s.push_str("None.\n");
    } else {
        s.push_str(
            "| severity | rule | metric | case | baseline | candidate | threshold |\n|---|---|---|---|---|---|---|\n",
        );
        for v in &verdict.violations {
            let sev = match v.severity {
                Severity::Fail => "FAIL",
                Severity::Warn => "WARN",
            };
            let metric = v.metric.map(|m| m.as_str()).unwrap_or("-");
            let _ = writeln!(
                s,
                "| {sev} | {} | {metric} | {} | {} | {} | {} |",
                v.rule,
                v.case_id.as_deref().unwrap_or("-"),
                fmt_opt(v.baseline),
                fmt_opt(v.candidate),
                v.threshold
            );
        }
    }

    let mut cited: alloc::collections::BTreeSet<&str> =
        verdict.violations.iter().filter_map(|v| v.case_id.as_deref()).collect();
    for ids in cmp.regressed.values() {
        cited.extend(ids.iter().map(String::as_str));
    }
    if let (Some((base, cand)), false) = (runs, cited.is_empty()) {
        s.push_str("\n## Regressed cases\n");
        for id in cited {
            let b = base.records.iter().find(|r| r.case_id == id);
            let c = cand.records.iter().find(|r| r.case_id == id);
            let _ = writeln!(s, "\n### `{id}`\n");
            if let Some(c) = c {
                let _ = writeln!(s, "Prompt:\n\n```\n{}\n```\n", excerpt(&c.prompt));
            }
            s.push_str("```diff\n");
            for line in b.map(|r| r.output()).unwrap_or("").lines() {
                let _ = writeln!(s, "- {line}");
            }
            for line in c.map(|r| r.output()).unwrap_or("").lines() {
                let _ = writeln!(s, "+ {line}");
            }
            if let Some(e) = c.and_then(|r| r.error.as_deref()) {
                let _ = writeln!(s, "! error: {e}");
            }
            s.push_str("```\n");
        }
    }
    let _ = writeln!(s, "\nVerdict: **{}**", verdict.status);
    s
}

const EXCERPT_CHARS: usize = 600;

fn excerpt(text: &str) -> String {
    match text.char_indices().nth(EXCERPT_CHARS) {
        Some((i, _)) => alloc::format!("{}...", &text[..i]),
        None => text.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricId;
    use crate::mock::MockAdapter;
    use crate::pipeline::{compare_runs, fixtures, gate, GatePolicy, MetricRule, Status};

    #[test]
    fn pass_report_has_no_violation_rows() {
        let s = fixtures::suite(2);
        let a = fixtures::run("a", &s, &MockAdapter::new());
        let cmp = compare_runs(&a, &a, 0.0).unwrap();
        let v = gate(&cmp, &GatePolicy::default());
        let md = report(&cmp, &v, Some((&a, &a)), ReportFormat::Markdown);
        assert!(md.contains("PASS"));
        assert!(md.contains("## Violations (0)"));
        let json = report(&cmp, &v, None, ReportFormat::Json);
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back.verdict, v);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
    }

    #[test]
    fn failures_appear_in_both_formats() {
        let s = fixtures::suite(3);
        let a = fixtures::run("a", &s, &MockAdapter::new());
        let mut b = a.clone();
        b.records[0].metrics.get_mut(&MetricId::Rouge1).unwrap().value = 0.2;
        b.records[2].metrics.get_mut(&MetricId::Rouge1).unwrap().value = 0.1;
        let cmp = compare_runs(&a, &b, 0.0).unwrap();
        let mut p = GatePolicy::default();
        p.metrics.insert(MetricId::Rouge1, MetricRule { per_case_drop_tolerance: 0.05, ..Default::default() });
        let v = gate(&cmp, &p);
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.violations.len(), 2);
        let md = report(&cmp, &v, Some((&a, &b)), ReportFormat::Markdown);
        let json = report(&cmp, &v, None, ReportFormat::Json);
        for id in ["c00", "c02"] {
            assert!(md.contains(&alloc::format!("| case_regression | rouge1 | {id} |")));
            assert!(json.contains(id));
        }
        assert!(md.contains("```diff"));
    }
}
