//! Post-processing fairness: reject-option classification, equalized-odds
//! mixing, calibrated equalized odds, and group disparity reports.
//!
//! All fit operations are deterministic; the randomized predictors take an
//! explicit seed.

mod calibrated;
mod disparity;
mod equalized_odds;
mod reject_option;

use core::fmt;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize};

pub use calibrated::{calibrated_eo_apply, calibrated_eo_fit, generalized_cost, mix_rate, CeoPolicy, CostKind};
pub use disparity::{disparity_report, DisparityReport, GroupDisparity};
pub use equalized_odds::{
    equalized_odds_apply, equalized_odds_fit, expected_error, expected_rates, GroupMix, MixingPolicy,
};
pub use reject_option::reject_option_classify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Privileged,
    Unprivileged,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::Privileged, Group::Unprivileged];

    pub fn other(self) -> Group {
        match self {
            Group::Privileged => Group::Unprivileged,
            Group::Unprivileged => Group::Privileged,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Privileged => "privileged",
            Group::Unprivileged => "unprivileged",
        })
    }
}

/// A value per group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerGroup<T> {
    pub privileged: T,
    pub unprivileged: T,
}

impl<T> PerGroup<T> {
    pub fn new(mut f: impl FnMut(Group) -> T) -> Self {
        PerGroup { privileged: f(Group::Privileged), unprivileged: f(Group::Unprivileged) }
    }
}

impl<T> Index<Group> for PerGroup<T> {
    type Output = T;
    fn index(&self, g: Group) -> &T {
        match g {
            Group::Privileged => &self.privileged,
            Group::Unprivileged => &self.unprivileged,
        }
    }
}

impl<T> IndexMut<Group> for PerGroup<T> {
    fn index_mut(&mut self, g: Group) -> &mut T {
        match g {
            Group::Privileged => &mut self.privileged,
            Group::Unprivileged => &mut self.unprivileged,
        }
    }
}

/// A scored prediction with its true label and group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub score: f64,
    pub group: Group,
    #[serde(deserialize_with = "label_from_int_or_bool", serialize_with = "label_to_int")]
    pub y_true: bool,
}

impl ScoredExample {
    pub fn new(score: f64, group: Group, y_true: bool) -> Self {
        ScoredExample { score, group, y_true }
    }
}

fn label_from_int_or_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    use serde::de::Error;
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::Bool(b) => Ok(b),
        serde_json::Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        serde_json::Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        other => Err(D::Error::custom(alloc::format!("y_true must be 0 or 1, got {other}"))),
    }
}

fn label_to_int<S: serde::Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingClass {
    Positives,
    Negatives,
}

impl fmt::Display for MissingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingClass::Positives => "positives",
            MissingClass::Negatives => "negatives",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FairnessError {
    #[error("group {group} has no {missing}")]
    DegenerateGroup { group: Group, missing: MissingClass },
    #[error("no mix rate equalizes costs: trivial cost equals group cost for {group}")]
    NoFeasibleMix { group: Group },
    #[error("{labels} labels for {examples} examples")]
    LengthMismatch { examples: usize, labels: usize },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
}

/// Thresholded confusion counts for one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }

    pub(crate) fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    fn check(&self, group: Group) -> Result<(), FairnessError> {
        if self.positives() == 0 {
            Err(FairnessError::DegenerateGroup { group, missing: MissingClass::Positives })
        } else if self.negatives() == 0 {
            Err(FairnessError::DegenerateGroup { group, missing: MissingClass::Negatives })
        } else {
            Ok(())
        }
    }
}

/// Per-group confusion counts for `ŷ = [score ≥ threshold]`.
pub fn confusion(examples: &[ScoredExample], threshold: f64) -> PerGroup<Confusion> {
    let mut out: PerGroup<Confusion> = PerGroup::default();
    for e in examples {
        out[e.group].add(e.score >= threshold, e.y_true);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub tpr: f64,
    pub fpr: f64,
    pub base_rate: f64,
    pub accuracy: f64,
    pub counts: Confusion,
}

impl GroupRates {
    fn from_counts(c: Confusion) -> Self {
        let total = c.total() as f64;
        GroupRates {
            tpr: c.tp as f64 / c.positives() as f64,
            fpr: c.fp as f64 / c.negatives() as f64,
            base_rate: c.positives() as f64 / total,
            accuracy: (c.tp + c.tn) as f64 / total,
            counts: c,
        }
    }
}

/// Thresholded rates per group; errors if a group lacks positives or
/// negatives.
pub fn group_rates(examples: &[ScoredExample], threshold: f64) -> Result<PerGroup<GroupRates>, FairnessError> {
    check_scores(examples)?;
    let counts = confusion(examples, threshold);
    for g in Group::BOTH {
        counts[g].check(g)?;
    }
    Ok(PerGroup::new(|g| GroupRates::from_counts(counts[g])))
}

pub(crate) fn check_scores(examples: &[ScoredExample]) -> Result<(), FairnessError> {
    match examples.iter().find(|e| !e.score.is_finite()) {
        Some(e) => Err(FairnessError::NonFiniteScore(e.score)),
        None => Ok(()),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::vec::Vec;

    /// Eight hand-labelled examples (score, group, y).
    pub fn eight() -> Vec<ScoredExample> {
        use Group::*;
        [
            (0.9, Privileged, true),
            (0.7, Privileged, true),
            (0.4, Privileged, true),
            (0.6, Privileged, false),
            (0.8, Unprivileged, true),
            (0.3, Unprivileged, true),
            (0.2, Unprivileged, false),
            (0.55, Unprivileged, false),
        ]
        .into_iter()
        .map(|(s, g, y)| ScoredExample::new(s, g, y))
        .collect()
    }
}
