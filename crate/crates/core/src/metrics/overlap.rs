use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use super::{MetricError, MetricId, MetricValue};
use crate::text::{normalize_answer, tokenize};

fn prf(overlap: usize, n_cand: usize, n_ref: usize) -> (f64, f64, f64) {
    match (n_cand, n_ref) {
        (0, 0) => (1.0, 1.0, 1.0),
        (0, _) | (_, 0) => (0.0, 0.0, 0.0),
        _ => {
            let p = overlap as f64 / n_cand as f64;
            let r = overlap as f64 / n_ref as f64;
            let f = if overlap == 0 { 0.0 } else { 2.0 * p * r / (p + r) };
            (p, r, f)
        }
    }
}

/// Token-multiset precision, recall and F1; the reference with the best F1
/// wins.
pub fn text_quality(candidate: &str, references: &[String]) -> Result<MetricValue, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    let mut cand_counts: BTreeMap<String, usize> = BTreeMap::new();
    let cand = tokenize(candidate);
    for t in &cand {
        *cand_counts.entry(t.clone()).or_insert(0) += 1;
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for reference in references {
        let toks = tokenize(reference);
        let mut remaining = cand_counts.clone();
        let mut overlap = 0;
        for t in &toks {
            if let Some(c) = remaining.get_mut(t) {
                if *c > 0 {
                    *c -= 1;
                    overlap += 1;
                }
            }
        }
        let scored = prf(overlap, cand.len(), toks.len());
        if best.is_none_or(|b| scored.2 > b.2) {
            best = Some(scored);
        }
    }
    let (p, r, f) = best.expect("non-empty references");
    Ok(MetricValue::new(MetricId::TextQuality, f)
        .with_detail("precision", p)
        .with_detail("recall", r)
        .with_detail("f1", f))
}

/// 1 when the normalized candidate equals any normalized reference.
pub fn exact_match(candidate: &str, references: &[String]) -> Result<MetricValue, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    let cand = normalize_answer(candidate);
    let hit = references.iter().any(|r| normalize_answer(r) == cand);
    Ok(MetricValue::new(MetricId::ExactMatch, if hit { 1.0 } else { 0.0 }))
}

/// Micro precision/recall/F1 over label sets, plus a per-label hit flag.
pub fn multilabel_metrics(predicted: &BTreeSet<String>, gold: &BTreeSet<String>) -> MetricValue {
    let tp = predicted.intersection(gold).count();
    let (p, r, f) = prf(tp, predicted.len(), gold.len());
    let mut value = MetricValue::new(MetricId::MultiLabel, f)
        .with_detail("micro_p", p)
        .with_detail("micro_r", r)
        .with_detail("micro_f1", f);
    for label in predicted.union(gold) {
        let hit = predicted.contains(label) && gold.contains(label);
        value.details.insert(alloc::format!("per_label:{label}"), if hit { 1.0 } else { 0.0 });
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn refs(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| String::from(*s)).collect()
    }

    fn labels(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn text_quality_examples() {
        let v = text_quality("b c d", &refs(&["a b c"])).unwrap();
        assert!((v.details["precision"] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v.details["recall"] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v.value - 0.6667).abs() < 1e-4);
        assert_eq!(text_quality("x y", &refs(&["x y"])).unwrap().value, 1.0);
        assert_eq!(text_quality("x y", &refs(&["z"])).unwrap().value, 0.0);
        assert_eq!(text_quality("", &refs(&[""])).unwrap().value, 1.0);
        assert_eq!(text_quality("", &refs(&["a"])).unwrap().value, 0.0);
    }

    #[test]
    fn text_quality_counts_multisets() {
        // candidate has "a" twice, reference once: overlap 1
        let v = text_quality("a a", &refs(&["a b"])).unwrap();
        assert_eq!(v.details["precision"], 0.5);
    }

    #[test]
    fn exact_match_examples() {
        assert_eq!(exact_match("Paris.", &refs(&["paris"])).unwrap().value, 1.0);
        assert_eq!(exact_match("Paris", &refs(&["Paris"])).unwrap().value, 1.0);
        assert_eq!(exact_match("London", &refs(&["Paris"])).unwrap().value, 0.0);
        assert_eq!(exact_match("x", &[]), Err(MetricError::EmptyReferences));
    }

    #[test]
    fn multilabel_examples() {
        let v = multilabel_metrics(&labels(&["A", "B"]), &labels(&["B", "C"]));
        assert_eq!((v.details["micro_p"], v.details["micro_r"], v.value), (0.5, 0.5, 0.5));
        assert_eq!(v.details["per_label:B"], 1.0);
        assert_eq!(v.details["per_label:A"], 0.0);
        assert_eq!(multilabel_metrics(&labels(&["A"]), &labels(&["A"])).value, 1.0);
        assert_eq!(multilabel_metrics(&labels(&[]), &labels(&["A"])).value, 0.0);
        assert_eq!(multilabel_metrics(&labels(&[]), &labels(&[])).value, 1.0);
    }
}
