use alloc::vec::Vec;

use super::{Group, ScoredExample};

/// Reject-option classification: inside the critical band
/// `|score - threshold| <= theta` (inclusive) the unprivileged group gets the
/// favourable label and the privileged group the unfavourable one; outside
/// it labels follow plain thresholding.
pub fn reject_option_classify(examples: &[ScoredExample], theta: f64, threshold: f64) -> Vec<u8> {
    examples
        .iter()
        .map(|e| {
            let in_band = libm::fabs(e.score - threshold) <= theta;
            let positive = if in_band { e.group == Group::Unprivileged } else { e.score >= threshold };
            u8::from(positive)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn theta_point_one() {
        let ex = [
            ScoredExample::new(0.45, Group::Unprivileged, false),
            ScoredExample::new(0.55, Group::Privileged, true),
            ScoredExample::new(0.95, Group::Privileged, true),
        ];
        assert_eq!(reject_option_classify(&ex, 0.1, 0.5), vec![1, 0, 1]);
    }

    #[test]
    fn theta_zero_only_touches_the_threshold() {
        let ex = [
            ScoredExample::new(0.5, Group::Privileged, true),
            ScoredExample::new(0.5, Group::Unprivileged, true),
            ScoredExample::new(0.49, Group::Unprivileged, true),
            ScoredExample::new(0.51, Group::Privileged, true),
        ];
        assert_eq!(reject_option_classify(&ex, 0.0, 0.5), vec![0, 1, 0, 1]);
    }

    #[test]
    fn theta_half_covers_everything() {
        let ex: Vec<_> =
            (0..=10).flat_map(|i| Group::BOTH.map(|g| ScoredExample::new(i as f64 / 10.0, g, true))).collect();
        for (e, l) in ex.iter().zip(reject_option_classify(&ex, 0.5, 0.5)) {
            assert_eq!(l, u8::from(e.group == Group::Unprivileged));
        }
    }
}
