use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{MetricConfig, MetricError, MetricId, MetricValue};
use crate::text::tokenize;

/// METEOR with exact unigram matching only (no stemming or synonyms).
pub fn meteor(candidate: &str, reference: &str) -> Result<MetricValue, MetricError> {
    meteor_with(candidate, reference, &MetricConfig::default())
}

pub(crate) fn meteor_with(candidate: &str, reference: &str, config: &MetricConfig) -> Result<MetricValue, MetricError> {
    let refs = tokenize(reference);
    if refs.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let cand = tokenize(candidate);
    let alignment = align(&cand, &refs);
    let matches = alignment.len();
    if matches == 0 {
        return Ok(MetricValue::new(MetricId::Meteor, 0.0).with_detail("matches", 0.0).with_detail("chunks", 0.0));
    }
    let chunks = count_chunks(&alignment);
    let m = matches as f64;
    let p = m / cand.len() as f64;
    let r = m / refs.len() as f64;
    let alpha = config.meteor_alpha;
    let f_mean = p * r / (alpha * p + (1.0 - alpha) * r);
    let frag = chunks as f64 / m;
    let penalty = config.meteor_gamma * libm::pow(frag, config.meteor_beta);
    Ok(MetricValue::new(MetricId::Meteor, f_mean * (1.0 - penalty))
        .with_detail("precision", p)
        .with_detail("recall", r)
        .with_detail("f_mean", f_mean)
        .with_detail("penalty", penalty)
        .with_detail("matches", m)
        .with_detail("chunks", chunks as f64))
}

/// Aligns candidate positions to reference positions one-to-one on exact
/// token equality. Each candidate token prefers the reference slot right
/// after the previous alignment (extending a chunk), else the earliest
/// unused occurrence.
fn align(cand: &[String], refs: &[String]) -> Vec<(usize, usize)> {
    let mut used = vec![false; refs.len()];
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for (ci, tok) in cand.iter().enumerate() {
        let next = prev.map(|p| p + 1).filter(|&j| j < refs.len() && !used[j] && refs[j] == *tok);
        let chosen = next.or_else(|| (0..refs.len()).find(|&j| !used[j] && refs[j] == *tok));
        match chosen {
            Some(j) => {
                used[j] = true;
                out.push((ci, j));
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    out
}

fn count_chunks(alignment: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut last: Option<(usize, usize)> = None;
    for &(c, r) in alignment {
        match last {
            Some((lc, lr)) if c == lc + 1 && r == lr + 1 => {}
            _ => chunks += 1,
        }
        last = Some((c, r));
    }
    chunks
}
