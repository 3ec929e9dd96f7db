use alloc::vec;
use alloc::vec::Vec;

use super::{MetricConfig, MetricId, MetricValue};
use crate::hash::fnv1a64;
use crate::math;
use crate::text::tokenize;

/// Term-frequency vector over [`tokenize`] output, hashed into `buckets`
/// slots with 64-bit FNV-1a.
pub fn hashed_tf_vector(text: &str, buckets: usize) -> Vec<f64> {
    let buckets = buckets.max(1);
    let mut v = vec![0.0; buckets];
    for t in tokenize(text) {
        v[(fnv1a64(t.as_bytes()) % buckets as u64) as usize] += 1.0;
    }
    v
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let zero_a = a.iter().all(|x| *x == 0.0);
    let zero_b = b.iter().all(|x| *x == 0.0);
    match (zero_a, zero_b) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    super::clamp_unit(dot / math::sqrt(na * nb))
}

pub(crate) fn similarity_local(a: &str, b: &str, buckets: usize) -> f64 {
    cosine(&hashed_tf_vector(a, buckets), &hashed_tf_vector(b, buckets))
}

/// Cosine similarity of hashed term-frequency vectors.
pub fn sentence_similarity(a: &str, b: &str) -> MetricValue {
    let buckets = MetricConfig::default().similarity_buckets;
    MetricValue::new(MetricId::SentenceSimilarity, similarity_local(a, b, buckets))
}

/// Cosine similarity using `embed` for vectors, falling back to the local
/// hashed vectorizer when `embed` fails for either text or returns
/// mismatched dimensions.
pub fn sentence_similarity_with<E>(a: &str, b: &str, embed: impl Fn(&str) -> Result<Vec<f64>, E>) -> MetricValue {
    match (embed(a), embed(b)) {
        (Ok(va), Ok(vb)) if va.len() == vb.len() && !va.is_empty() => {
            MetricValue::new(MetricId::SentenceSimilarity, cosine(&va, &vb))
        }
        _ => sentence_similarity(a, b),
    }
}
