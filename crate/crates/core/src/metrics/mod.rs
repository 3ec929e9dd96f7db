//! Functionality metrics and their per-task applicability.
//!
//! Every metric works on the shared [`tokenize`](crate::text::tokenize)
//! output so scores are comparable across models with different native
//! tokenizers.

mod meteor;
mod ngram;
mod overlap;
mod readability;
mod sari;
mod similarity;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::suite::TaskKind;

pub use meteor::meteor;
pub use ngram::{bleu, rouge, RougeVariant};
pub use overlap::{exact_match, multilabel_metrics, text_quality};
pub use readability::{readability, readability_grade};
pub use sari::sari;
pub use similarity::{hashed_tf_vector, sentence_similarity, sentence_similarity_with};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("at least one reference is required")]
    EmptyReferences,
    #[error("reference text is empty")]
    EmptyReference,
    #[error("source text is empty")]
    EmptySource,
    #[error("text contains no words")]
    EmptyText,
    #[error("metric {metric} is not applicable to task {task}")]
    Applicability { metric: MetricId, task: TaskKind },
}

/// One scored metric.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Copy)]
pub enum MetricId {
    #[serde(rename = "rouge1")]
    Rouge1,
    #[serde(rename = "rouge2")]
    Rouge2,
    #[serde(rename = "rougeL")]
    RougeL,
    #[serde(rename = "sari")]
    Sari,
    #[serde(rename = "meteor")]
    Meteor,
    #[serde(rename = "text_quality")]
    TextQuality,
    #[serde(rename = "bleu")]
    Bleu,
    #[serde(rename = "sentence_similarity")]
    SentenceSimilarity,
    #[serde(rename = "readability")]
    Readability,
    #[serde(rename = "exact_match")]
    ExactMatch,
    #[serde(rename = "multilabel")]
    MultiLabel,
}

impl MetricId {
    pub const ALL: [MetricId; 11] = [
        MetricId::Rouge1,
        MetricId::Rouge2,
        MetricId::RougeL,
        MetricId::Sari,
        MetricId::Meteor,
        MetricId::TextQuality,
        MetricId::Bleu,
        MetricId::SentenceSimilarity,
        MetricId::Readability,
        MetricId::ExactMatch,
        MetricId::MultiLabel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Rouge1 => "rouge1",
            MetricId::Rouge2 => "rouge2",
            MetricId::RougeL => "rougeL",
            MetricId::Sari => "sari",
            MetricId::Meteor => "meteor",
            MetricId::TextQuality => "text_quality",
            MetricId::Bleu => "bleu",
            MetricId::SentenceSimilarity => "sentence_similarity",
            MetricId::Readability => "readability",
            MetricId::ExactMatch => "exact_match",
            MetricId::MultiLabel => "multilabel",
        }
    }

    pub fn family(self) -> MetricFamily {
        match self {
            MetricId::Rouge1 | MetricId::Rouge2 | MetricId::RougeL => MetricFamily::Rouge,
            MetricId::Sari => MetricFamily::Sari,
            MetricId::Meteor => MetricFamily::Meteor,
            MetricId::TextQuality => MetricFamily::TextQuality,
            MetricId::Bleu => MetricFamily::Bleu,
            MetricId::SentenceSimilarity => MetricFamily::SentenceSimilarity,
            MetricId::Readability => MetricFamily::Readability,
            MetricId::ExactMatch => MetricFamily::ExactMatch,
            MetricId::MultiLabel => MetricFamily::MultiLabel,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(key))
            .or(match key.to_ascii_lowercase().as_str() {
                "rouge-1" | "rouge_1" => Some(MetricId::Rouge1),
                "rouge-2" | "rouge_2" => Some(MetricId::Rouge2),
                "rouge-l" | "rouge_l" => Some(MetricId::RougeL),
                "multi_label" => Some(MetricId::MultiLabel),
                _ => None,
            })
            .ok_or_else(|| alloc::format!("unknown metric `{s}`"))
    }
}

/// The nine metric rows of the applicability table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFamily {
    Rouge,
    Sari,
    Meteor,
    TextQuality,
    Bleu,
    SentenceSimilarity,
    Readability,
    ExactMatch,
    MultiLabel,
}

impl MetricFamily {
    pub const ALL: [MetricFamily; 9] = [
        MetricFamily::Rouge,
        MetricFamily::Sari,
        MetricFamily::Meteor,
        MetricFamily::TextQuality,
        MetricFamily::Bleu,
        MetricFamily::SentenceSimilarity,
        MetricFamily::Readability,
        MetricFamily::ExactMatch,
        MetricFamily::MultiLabel,
    ];

    /// Whether this family is marked for `task`.
    pub fn applies_to(self, task: TaskKind) -> bool {
        use MetricFamily::*;
        use TaskKind::*;
        matches!(
            (self, task),
            (Rouge, _)
                | (Sari, Summarization)
                | (Meteor, ContentGeneration | QuestionAnswering)
                | (TextQuality, Summarization | ContentGeneration)
                | (Bleu, Summarization | ContentGeneration | QuestionAnswering)
                | (SentenceSimilarity, Summarization)
                | (Readability, Summarization | ContentGeneration)
                | (ExactMatch, QuestionAnswering | EntityExtraction)
                | (MultiLabel, EntityExtraction)
        )
    }
}

/// Metric families marked for `task`.
pub fn applicable_families(task: TaskKind) -> BTreeSet<MetricFamily> {
    MetricFamily::ALL.into_iter().filter(|f| f.applies_to(task)).collect()
}

/// Concrete metrics computed for `task`; ROUGE expands to ROUGE-1, ROUGE-2
/// and ROUGE-L.
pub fn applicable_metrics(task: TaskKind) -> BTreeSet<MetricId> {
    MetricId::ALL.into_iter().filter(|m| m.family().applies_to(task)).collect()
}

/// Fails with [`MetricError::Applicability`] when `metric` is not marked for
/// `task`.
pub fn ensure_applicable(metric: MetricId, task: TaskKind) -> Result<(), MetricError> {
    if metric.family().applies_to(task) {
        Ok(())
    } else {
        Err(MetricError::Applicability { metric, task })
    }
}

/// A scored metric. `value` is always in `[0, 1]`; readability also carries
/// its 1..=7 grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub id: MetricId,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<u8>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl MetricValue {
    pub(crate) fn new(id: MetricId, value: f64) -> Self {
        MetricValue { id, value: clamp_unit(value), grade: None, details: BTreeMap::new() }
    }

    pub(crate) fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }
}

pub(crate) fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Constants every metric is scored with. Persisted with each run so a
/// comparison can refuse runs scored under different settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub rouge_l_beta: f64,
    pub bleu_max_n: usize,
    pub bleu_epsilon: f64,
    pub sari_max_n: usize,
    pub meteor_alpha: f64,
    pub meteor_gamma: f64,
    pub meteor_beta: f64,
    pub similarity_buckets: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            rouge_l_beta: 1.2,
            bleu_max_n: 4,
            bleu_epsilon: 1e-9,
            sari_max_n: 4,
            meteor_alpha: 0.9,
            meteor_gamma: 0.5,
            meteor_beta: 3.0,
            similarity_buckets: 1024,
        }
    }
}

impl MetricConfig {
    pub fn hash(&self) -> String {
        crate::hash::canonical_hash(self)
    }
}

/// Everything a metric may look at for one case.
#[derive(Debug, Clone, Copy)]
pub struct MetricInput<'a> {
    pub source: &'a str,
    pub candidate: &'a str,
    pub references: &'a [String],
    pub predicted_labels: Option<&'a BTreeSet<String>>,
    pub gold_labels: Option<&'a BTreeSet<String>>,
}

/// Computes `metric` for a case of kind `task`, enforcing applicability.
pub fn compute_metric(
    metric: MetricId,
    task: TaskKind,
    input: &MetricInput<'_>,
    config: &MetricConfig,
) -> Result<MetricValue, MetricError> {
    ensure_applicable(metric, task)?;
    let refs = input.references;
    match metric {
        MetricId::Rouge1 => ngram::rouge_with(input.candidate, refs, RougeVariant::N(1), config),
        MetricId::Rouge2 => ngram::rouge_with(input.candidate, refs, RougeVariant::N(2), config),
        MetricId::RougeL => ngram::rouge_with(input.candidate, refs, RougeVariant::L, config),
        MetricId::Sari => sari::sari_with(input.source, input.candidate, refs, config),
        MetricId::Meteor => {
            if refs.is_empty() {
                return Err(MetricError::EmptyReferences);
            }
            let mut best: Option<MetricValue> = None;
            for r in refs {
                let v = meteor::meteor_with(input.candidate, r, config)?;
                if best.as_ref().is_none_or(|b| v.value > b.value) {
                    best = Some(v);
                }
            }
            Ok(best.expect("non-empty references"))
        }
        MetricId::TextQuality => text_quality(input.candidate, refs),
        MetricId::Bleu => ngram::bleu_with(input.candidate, refs, config.bleu_max_n, config),
        MetricId::SentenceSimilarity => {
            if refs.is_empty() {
                return Err(MetricError::EmptyReferences);
            }
            let best = refs
                .iter()
                .map(|r| similarity::similarity_local(input.candidate, r, config.similarity_buckets))
                .fold(0.0f64, f64::max);
            Ok(MetricValue::new(MetricId::SentenceSimilarity, best))
        }
        MetricId::Readability => readability(input.candidate),
        MetricId::ExactMatch => exact_match(input.candidate, refs),
        MetricId::MultiLabel => {
            let empty = BTreeSet::new();
            Ok(multilabel_metrics(input.predicted_labels.unwrap_or(&empty), input.gold_labels.unwrap_or(&empty)))
        }
    }
}

/// Token n-grams of `tokens` (empty when `tokens.len() < n`).
pub(crate) fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    let count = if n == 0 || tokens.len() < n { 0 } else { tokens.len() - n + 1 };
    (0..count).map(move |i| &tokens[i..i + n])
}

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    for g in ngrams(tokens, n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// Local hashed-vector similarity used to rank few-shot demos.
pub(crate) fn similarity_for_demos(a: &str, b: &str) -> f64 {
    similarity::similarity_local(a, b, MetricConfig::default().similarity_buckets)
}

pub(crate) fn tokenize_all(texts: &[String]) -> Vec<Vec<String>> {
    texts.iter().map(|t| crate::text::tokenize(t)).collect()
}
