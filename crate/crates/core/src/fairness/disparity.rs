use serde::{Deserialize, Serialize};

use super::{Confusion, FairnessError, Group, PerGroup, ScoredExample};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupDisparity {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub selection_rate: Option<f64>,
    pub accuracy: Option<f64>,
    pub counts: Confusion,
}

/// Absolute between-group gaps of final labels. A gap is `None` when the rate
/// is undefined for either group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub tpr_gap: Option<f64>,
    pub fpr_gap: Option<f64>,
    pub selection_rate_gap: Option<f64>,
    pub groups: PerGroup<GroupDisparity>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn gap(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(libm::fabs(a? - b?))
}

pub fn disparity_report(examples: &[ScoredExample], labels: &[u8]) -> Result<DisparityReport, FairnessError> {
    if examples.len() != labels.len() {
        return Err(FairnessError::LengthMismatch { examples: examples.len(), labels: labels.len() });
    }
    let mut counts: PerGroup<Confusion> = PerGroup::default();
    for (e, l) in examples.iter().zip(labels) {
        counts[e.group].add(*l != 0, e.y_true);
    }
    let groups = PerGroup::new(|g: Group| {
        let c = counts[g];
        GroupDisparity {
            tpr: ratio(c.tp, c.positives()),
            fpr: ratio(c.fp, c.negatives()),
            selection_rate: ratio(c.tp + c.fp, c.total()),
            accuracy: ratio(c.tp + c.tn, c.total()),
            counts: c,
        }
    });
    Ok(DisparityReport {
        tpr_gap: gap(groups.privileged.tpr, groups.unprivileged.tpr),
        fpr_gap: gap(groups.privileged.fpr, groups.unprivileged.fpr),
        selection_rate_gap: gap(groups.privileged.selection_rate, groups.unprivileged.selection_rate),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::fixtures::eight;
    use alloc::vec::Vec;

    #[test]
    fn symmetric_fixture_has_no_gaps() {
        let mut ex = Vec::new();
        for g in Group::BOTH {
            ex.push(ScoredExample::new(0.9, g, true));
            ex.push(ScoredExample::new(0.2, g, false));
            ex.push(ScoredExample::new(0.6, g, false));
        }
        let labels: Vec<u8> = ex.iter().map(|e| u8::from(e.score >= 0.5)).collect();
        let r = disparity_report(&ex, &labels).unwrap();
        assert_eq!((r.tpr_gap, r.fpr_gap, r.selection_rate_gap), (Some(0.0), Some(0.0), Some(0.0)));
    }

    #[test]
    fn hand_computed_gaps() {
        let ex = eight();
        let labels: Vec<u8> = ex.iter().map(|e| u8::from(e.score >= 0.5)).collect();
        let r = disparity_report(&ex, &labels).unwrap();
        // privileged: TPR 2/3, FPR 1, selection 3/4, accuracy 1/2
        // unprivileged: TPR 1/2, FPR 1/2, selection 1/2, accuracy 1/2
        assert!((r.tpr_gap.unwrap() - (2.0 / 3.0 - 0.5)).abs() < 1e-15);
        assert_eq!(r.fpr_gap, Some(0.5));
        assert_eq!(r.selection_rate_gap, Some(0.25));
        assert_eq!(r.groups.privileged.accuracy, Some(0.5));
        assert_eq!(r.groups.unprivileged.accuracy, Some(0.5));
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(disparity_report(&eight(), &[1, 0]), Err(FairnessError::LengthMismatch { examples: 8, labels: 2 }));
    }
}
