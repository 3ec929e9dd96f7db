use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_scores, FairnessError, Group, MissingClass, PerGroup, ScoredExample};
use crate::rng::SeededRng;

/// Generalized cost the mixing equalizes across groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// Mean score over true negatives.
    Fpr,
    /// Mean `1 - score` over true positives.
    Fnr,
    /// `w_fp · gFPR + w_fn · gFNR`.
    Weighted { w_fp: f64, w_fn: f64 },
}

impl CostKind {
    fn weights(self) -> (f64, f64) {
        match self {
            CostKind::Fpr => (1.0, 0.0),
            CostKind::Fnr => (0.0, 1.0),
            CostKind::Weighted { w_fp, w_fn } => (w_fp, w_fn),
        }
    }
}

/// Generalized cost of `scores` within one group, plus the group's base rate.
pub fn generalized_cost<'a>(
    examples: impl IntoIterator<Item = &'a ScoredExample>,
    cost: CostKind,
) -> Option<(f64, f64)> {
    let (mut neg_sum, mut neg_n, mut pos_sum, mut pos_n) = (0.0, 0usize, 0.0, 0usize);
    for e in examples {
        if e.y_true {
            pos_sum += 1.0 - e.score;
            pos_n += 1;
        } else {
            neg_sum += e.score;
            neg_n += 1;
        }
    }
    if pos_n == 0 || neg_n == 0 {
        return None;
    }
    let (w_fp, w_fn) = cost.weights();
    let gfpr = neg_sum / neg_n as f64;
    let gfnr = pos_sum / pos_n as f64;
    let base_rate = pos_n as f64 / (pos_n + neg_n) as f64;
    Some((w_fp * gfpr + w_fn * gfnr, base_rate))
}

/// `α = (c_other − c_g) / (c_trivial_g − c_g)`, clamped to `[0, 1]`.
pub fn mix_rate(c_g: f64, c_other: f64, c_trivial_g: f64) -> Option<f64> {
    let denom = c_trivial_g - c_g;
    if libm::fabs(denom) <= 1e-12 {
        return None;
    }
    Some(((c_other - c_g) / denom).clamp(0.0, 1.0))
}

/// A fitted calibrated equalized-odds post-processor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeoPolicy {
    pub mix_rates: PerGroup<f64>,
    pub base_rates: PerGroup<f64>,
    pub costs: PerGroup<f64>,
    pub trivial_costs: PerGroup<f64>,
    pub cost: CostKind,
}

/// Picks the cheaper group and the rate at which mixing it with its
/// base-rate predictor raises its cost to the other group's.
pub fn calibrated_eo_fit(examples: &[ScoredExample], cost: CostKind) -> Result<CeoPolicy, FairnessError> {
    check_scores(examples)?;
    let mut costs = PerGroup::default();
    let mut base_rates = PerGroup::default();
    let mut trivial_costs = PerGroup::default();
    let (w_fp, w_fn) = cost.weights();
    for g in Group::BOTH {
        let members = examples.iter().filter(|e| e.group == g);
        let (c, mu) = generalized_cost(members, cost).ok_or_else(|| {
            let has_pos = examples.iter().any(|e| e.group == g && e.y_true);
            let missing = if has_pos { MissingClass::Negatives } else { MissingClass::Positives };
            FairnessError::DegenerateGroup { group: g, missing }
        })?;
        costs[g] = c;
        base_rates[g] = mu;
        trivial_costs[g] = w_fp * mu + w_fn * (1.0 - mu);
    }
    let mut mix_rates = PerGroup { privileged: 0.0, unprivileged: 0.0 };
    if libm::fabs(costs.privileged - costs.unprivileged) > 1e-12 {
        let g = if costs.privileged < costs.unprivileged { Group::Privileged } else { Group::Unprivileged };
        mix_rates[g] =
            mix_rate(costs[g], costs[g.other()], trivial_costs[g]).ok_or(FairnessError::NoFeasibleMix { group: g })?;
    }
    Ok(CeoPolicy { mix_rates, base_rates, costs, trivial_costs, cost })
}

/// With probability `α_g` replaces a score by its group's base rate, then
/// labels at 0.5. One uniform draw per example, in order.
pub fn calibrated_eo_apply(policy: &CeoPolicy, examples: &[ScoredExample], seed: u64) -> Vec<(f64, u8)> {
    let mut rng = SeededRng::new(seed);
    examples
        .iter()
        .map(|e| {
            let swap = rng.bernoulli(policy.mix_rates[e.group]);
            let score = if swap { policy.base_rates[e.group] } else { e.score };
            (score, u8::from(score >= 0.5))
        })
        .collect()
}
