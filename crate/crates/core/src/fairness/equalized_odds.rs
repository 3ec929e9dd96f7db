use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_scores, confusion, Confusion, FairnessError, Group, PerGroup, ScoredExample};
use crate::math;
use crate::rng::SeededRng;

/// Probabilities that a base-positive stays positive (`p2p`) and that a
/// base-negative flips to positive (`n2p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMix {
    pub p2p: f64,
    pub n2p: f64,
}

impl GroupMix {
    pub const IDENTITY: GroupMix = GroupMix { p2p: 1.0, n2p: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingPolicy {
    pub privileged: GroupMix,
    pub unprivileged: GroupMix,
    pub threshold: f64,
}

impl MixingPolicy {
    pub fn identity(threshold: f64) -> Self {
        MixingPolicy { privileged: GroupMix::IDENTITY, unprivileged: GroupMix::IDENTITY, threshold }
    }

    pub fn mix(&self, g: Group) -> GroupMix {
        match g {
            Group::Privileged => self.privileged,
            Group::Unprivileged => self.unprivileged,
        }
    }

    fn from_vars(x: [f64; 4], threshold: f64) -> Self {
        MixingPolicy {
            privileged: GroupMix { p2p: x[0], n2p: x[1] },
            unprivileged: GroupMix { p2p: x[2], n2p: x[3] },
            threshold,
        }
    }
}

/// Expected (TPR, FPR) of the derived predictor for one group.
pub fn expected_rates(mix: GroupMix, c: &Confusion) -> (f64, f64) {
    let tpr = (mix.p2p * c.tp as f64 + mix.n2p * c.fn_ as f64) / c.positives() as f64;
    let fpr = (mix.p2p * c.fp as f64 + mix.n2p * c.tn as f64) / c.negatives() as f64;
    (tpr, fpr)
}

/// Expected 0/1 error rate of the derived predictor over all examples.
pub fn expected_error(policy: &MixingPolicy, counts: &PerGroup<Confusion>) -> f64 {
    let total = (counts.privileged.total() + counts.unprivileged.total()) as f64;
    Group::BOTH.iter().map(|&g| group_errors(policy.mix(g), &counts[g])).sum::<f64>() / total
}

fn group_errors(m: GroupMix, c: &Confusion) -> f64 {
    // missed positives + accepted negatives
    c.positives() as f64 - (m.p2p * c.tp as f64 + m.n2p * c.fn_ as f64) + (m.p2p * c.fp as f64 + m.n2p * c.tn as f64)
}

const BOUND_TOL: f64 = 1e-12;

/// Fits the error-minimizing mixing rates under equal expected TPR and FPR
/// across groups.
///
/// Four variables, two equality rows, box bounds: every vertex has at most
/// two free variables, so all `3^4` assignments of {free, 0, 1} are
/// enumerated and the free part is solved directly. Ties in error prefer the
/// policy closest to the identity.
pub fn equalized_odds_fit(examples: &[ScoredExample], threshold: f64) -> Result<MixingPolicy, FairnessError> {
    check_scores(examples)?;
    let counts = confusion(examples, threshold);
    for g in Group::BOTH {
        counts[g].check(g)?;
    }
    let rate = |c: &Confusion| (c.tp as f64 / c.positives() as f64, c.fp as f64 / c.negatives() as f64);
    let (ta, fa) = rate(&counts.privileged);
    let (tb, fb) = rate(&counts.unprivileged);
    // rows: a·x = 0 for TPR and FPR parity
    let rows = [[ta, 1.0 - ta, -tb, -(1.0 - tb)], [fa, 1.0 - fa, -fb, -(1.0 - fb)]];

    let mut best: Option<(f64, f64, [f64; 4])> = None;
    for code in 0..81u32 {
        let mut assign = [0u8; 4];
        let mut c = code;
        for slot in assign.iter_mut() {
            *slot = (c % 3) as u8;
            c /= 3;
        }
        let Some(x) = solve_vertex(&rows, &assign) else { continue };
        let policy = MixingPolicy::from_vars(x, threshold);
        let err = expected_error(&policy, &counts);
        let dist = math::abs(x[0] - 1.0) + math::abs(x[1]) + math::abs(x[2] - 1.0) + math::abs(x[3]);
        let better = match best {
            None => true,
            Some((be, bd, _)) => err < be - 1e-12 || (err <= be + 1e-12 && dist < bd - 1e-12),
        };
        if better {
            best = Some((err, dist, x));
        }
    }
    let (_, _, x) = best.expect("the all-negative policy is always feasible");
    Ok(MixingPolicy::from_vars(x, threshold))
}

/// `assign[i]`: 0 = free, 1 = fixed at 0, 2 = fixed at 1.
fn solve_vertex(rows: &[[f64; 4]; 2], assign: &[u8; 4]) -> Option<[f64; 4]> {
    let mut x = [0.0; 4];
    let mut free = Vec::new();
    for i in 0..4 {
        match assign[i] {
            0 => free.push(i),
            1 => x[i] = 0.0,
            _ => x[i] = 1.0,
        }
    }
    if free.len() > 2 {
        return None;
    }
    // residual rhs for each row: sum over fixed vars
    let rhs: [f64; 2] = [0, 1].map(|r| -(0..4).filter(|i| assign[*i] != 0).map(|i| rows[r][i] * x[i]).sum::<f64>());
    match free.len() {
        0 => {}
        1 => {
            let i = free[0];
            let pivot = if math::abs(rows[0][i]) >= math::abs(rows[1][i]) { 0 } else { 1 };
            if math::abs(rows[pivot][i]) < 1e-15 {
                return None;
            }
            x[i] = rhs[pivot] / rows[pivot][i];
        }
        _ => {
            let (i, j) = (free[0], free[1]);
            let det = rows[0][i] * rows[1][j] - rows[0][j] * rows[1][i];
            if math::abs(det) < 1e-15 {
                return None;
            }
            x[i] = (rhs[0] * rows[1][j] - rows[0][j] * rhs[1]) / det;
            x[j] = (rows[0][i] * rhs[1] - rhs[0] * rows[1][i]) / det;
        }
    }
    for v in x.iter_mut() {
        if *v < -BOUND_TOL || *v > 1.0 + BOUND_TOL {
            return None;
        }
        *v = v.clamp(0.0, 1.0);
    }
    for row in rows {
        let r: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
        if math::abs(r) > 1e-9 {
            return None;
        }
    }
    Some(x)
}

/// Draws labels from the randomized derived predictor. One uniform draw is
/// consumed per example, in order.
pub fn equalized_odds_apply(policy: &MixingPolicy, examples: &[ScoredExample], seed: u64) -> Vec<u8> {
    let mut rng = SeededRng::new(seed);
    examples
        .iter()
        .map(|e| {
            let mix = policy.mix(e.group);
            let p = if e.score >= policy.threshold { mix.p2p } else { mix.n2p };
            u8::from(rng.bernoulli(p))
        })
        .collect()
}
