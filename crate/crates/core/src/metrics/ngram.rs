use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{ngram_counts, tokenize_all, MetricConfig, MetricError, MetricId, MetricValue};
use crate::math;
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    /// ROUGE-N recall for n-grams of this order (1 or 2 in the metric table).
    N(usize),
    /// LCS-based F-measure.
    L,
}

/// ROUGE with the default configuration.
pub fn rouge(candidate: &str, references: &[String], variant: RougeVariant) -> Result<MetricValue, MetricError> {
    rouge_with(candidate, references, variant, &MetricConfig::default())
}

pub(crate) fn rouge_with(
    candidate: &str,
    references: &[String],
    variant: RougeVariant,
    config: &MetricConfig,
) -> Result<MetricValue, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    let cand = tokenize(candidate);
    let refs = tokenize_all(references);
    Ok(match variant {
        RougeVariant::N(n) => {
            let id = match n {
                1 => MetricId::Rouge1,
                2 => MetricId::Rouge2,
                _ => MetricId::Rouge1,
            };
            let (recall, precision) = rouge_n_tokens(&cand, &refs, n);
            MetricValue::new(id, recall).with_detail("precision", precision)
        }
        RougeVariant::L => {
            let (f, p, r) = rouge_l_tokens(&cand, &refs, config.rouge_l_beta);
            MetricValue::new(MetricId::RougeL, f).with_detail("precision", p).with_detail("recall", r)
        }
    })
}

/// Best recall over references, and the precision at that reference.
fn rouge_n_tokens(cand: &[String], refs: &[Vec<String>], n: usize) -> (f64, f64) {
    if cand.is_empty() || n == 0 {
        return (0.0, 0.0);
    }
    let cand_counts = ngram_counts(cand, n);
    let cand_total = cand.len().saturating_sub(n - 1);
    let mut best = (0.0, 0.0);
    for r in refs.iter().filter(|r| r.len() >= n) {
        let ref_counts = ngram_counts(r, n);
        let matches: usize = ref_counts.iter().map(|(g, &rc)| rc.min(cand_counts.get(g).copied().unwrap_or(0))).sum();
        let recall = matches as f64 / (r.len() - n + 1) as f64;
        let precision = if cand_total == 0 { 0.0 } else { matches as f64 / cand_total as f64 };
        if recall > best.0 {
            best = (recall, precision);
        }
    }
    best
}

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Best (F, P, R) by F over non-empty references.
fn rouge_l_tokens(cand: &[String], refs: &[Vec<String>], beta: f64) -> (f64, f64, f64) {
    if cand.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let b2 = beta * beta;
    let mut best = (0.0, 0.0, 0.0);
    for r in refs.iter().filter(|r| !r.is_empty()) {
        let lcs = lcs_len(cand, r);
        if lcs == 0 {
            continue;
        }
        let p = lcs as f64 / cand.len() as f64;
        let rc = lcs as f64 / r.len() as f64;
        let f = (1.0 + b2) * p * rc / (rc + b2 * p);
        if f > best.0 {
            best = (f, p, rc);
        }
    }
    best
}

/// BLEU with uniform weights over orders `1..=max_n`, brevity penalty against
/// the closest reference length, and zero-match precisions floored at
/// `1e-9`.
pub fn bleu(candidate: &str, references: &[String], max_n: usize) -> Result<MetricValue, MetricError> {
    bleu_with(candidate, references, max_n, &MetricConfig::default())
}

pub(crate) fn bleu_with(
    candidate: &str,
    references: &[String],
    max_n: usize,
    config: &MetricConfig,
) -> Result<MetricValue, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    let max_n = max_n.max(1);
    let cand = tokenize(candidate);
    let refs = tokenize_all(references);
    let c = cand.len();
    if c == 0 {
        return Ok(MetricValue::new(MetricId::Bleu, 0.0).with_detail("brevity_penalty", 0.0));
    }
    let r = closest_ref_len(c, &refs);

    let mut log_sum = 0.0;
    let mut value = MetricValue::new(MetricId::Bleu, 0.0);
    for n in 1..=max_n {
        let p = modified_precision(&cand, &refs, n, config.bleu_epsilon);
        value.details.insert(alloc::format!("p{n}"), p);
        log_sum += math::ln(p);
    }
    let bp = math::exp((1.0 - r as f64 / c as f64).min(0.0));
    let score = bp * math::exp(log_sum / max_n as f64);
    value.value = super::clamp_unit(score);
    value.details.insert("brevity_penalty".into(), bp);
    Ok(value)
}

fn closest_ref_len(c: usize, refs: &[Vec<String>]) -> usize {
    refs.iter().map(|r| r.len()).min_by_key(|&len| (len.abs_diff(c), len)).unwrap_or(0)
}

fn modified_precision(cand: &[String], refs: &[Vec<String>], n: usize, epsilon: f64) -> f64 {
    let total = cand.len().saturating_sub(n - 1);
    let cand_counts = ngram_counts(cand, n);
    let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
    let matches: usize = cand_counts
        .iter()
        .map(|(g, &cc)| {
            let max_ref = ref_counts.iter().map(|rc| rc.get(g).copied().unwrap_or(0)).max().unwrap_or(0);
            cc.min(max_ref)
        })
        .sum();
    if matches == 0 || total == 0 {
        epsilon
    } else {
        matches as f64 / total as f64
    }
}
