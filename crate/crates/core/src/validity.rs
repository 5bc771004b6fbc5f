//! Skewness gate for test-score distributions.
//!
//! A norm-referenced test should give a roughly symmetric score distribution
//! over the population it targets. Strong left skew means most of the cohort
//! hit the ceiling and the test no longer separates strong students, so the
//! administration is not accepted.

use std::fmt;

use crate::error::{Error, Result};
use crate::stats::sample_skewness;

pub const RETEST_HINT: &str =
    "consider a follow-up administration with 5-6 harder items and scoring the combined result";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityConfig {
    skew_threshold: f64,
    enabled: bool,
}

impl ValidityConfig {
    pub fn new(skew_threshold: f64, enabled: bool) -> Result<Self> {
        if !(skew_threshold.is_finite() && skew_threshold < 0.0) {
            return Err(Error::Config(format!(
                "skewness threshold must be negative, got {skew_threshold}"
            )));
        }
        Ok(Self {
            skew_threshold,
            enabled,
        })
    }

    pub fn skew_threshold(&self) -> f64 {
        self.skew_threshold
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self {
            skew_threshold: -1.0,
            enabled: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictReason {
    Accepted,
    LeftSkewRejected,
    GateDisabled,
}

impl fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictReason::Accepted => "accepted",
            VerdictReason::LeftSkewRejected => "left-skewed-rejected",
            VerdictReason::GateDisabled => "gate-disabled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityVerdict {
    pub skewness: f64,
    pub accepted: bool,
    pub reason: VerdictReason,
}

impl ValidityVerdict {
    /// Follow-up suggestion for rejected administrations.
    pub fn hint(&self) -> Option<&'static str> {
        (!self.accepted).then_some(RETEST_HINT)
    }
}

/// Rejects iff the gate is enabled and skewness is strictly below the threshold.
pub fn gate_test_scores(scores: &[f64], cfg: &ValidityConfig) -> Result<ValidityVerdict> {
    let skewness = match sample_skewness(scores) {
        Ok(s) => s,
        Err(Error::DegenerateSample) => {
            return Err(Error::InsufficientData {
                needed: 3,
                got: scores.len(),
            })
        }
        Err(e) => return Err(e),
    };
    let (accepted, reason) = if !cfg.enabled {
        (true, VerdictReason::GateDisabled)
    } else if skewness < cfg.skew_threshold {
        (false, VerdictReason::LeftSkewRejected)
    } else {
        (true, VerdictReason::Accepted)
    };
    Ok(ValidityVerdict {
        skewness,
        accepted,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // skewness -2.2324 (mirror of [1, 2, 3, 4, 100])
    const LEFT: [f64; 5] = [100.0, 99.0, 98.0, 97.0, 1.0];

    #[test]
    fn threshold_rule() {
        let cfg = ValidityConfig::default();
        let v = gate_test_scores(&LEFT, &cfg).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.reason, VerdictReason::LeftSkewRejected);
        assert!(v.hint().is_some());

        let v = gate_test_scores(&[1.0, 2.0, 3.0, 4.0, 100.0], &cfg).unwrap();
        assert!(v.accepted);
        assert!((v.skewness - 2.232).abs() < 1e-3);
        assert_eq!(v.reason, VerdictReason::Accepted);
    }

    #[test]
    fn mild_left_skew_accepted_and_strong_rejected() {
        let cfg = ValidityConfig::default();
        let skew = sample_skewness(&LEFT).unwrap();
        // threshold between the sample's skewness and zero rejects, below it accepts
        let lenient = ValidityConfig::new(skew - 0.5, true).unwrap();
        assert!(gate_test_scores(&LEFT, &lenient).unwrap().accepted);
        let strict = ValidityConfig::new(skew + 0.5, true).unwrap();
        assert!(!gate_test_scores(&LEFT, &strict).unwrap().accepted);
        // skewness -0.590 and -1.671 by the direct formula
        let mild = gate_test_scores(&[10.0, 9.0, 8.0, 7.0, 5.0], &cfg).unwrap();
        assert!(mild.accepted && (mild.skewness + 0.590_128_656).abs() < 1e-8);
        let strong = gate_test_scores(&[10.0, 10.0, 9.0, 8.0, 4.0], &cfg).unwrap();
        assert!(!strong.accepted && (strong.skewness + 1.671_214_410).abs() < 1e-8);
    }

    #[test]
    fn boundary_is_accepted() {
        let skew = sample_skewness(&LEFT).unwrap();
        let cfg = ValidityConfig::new(skew, true).unwrap();
        assert!(gate_test_scores(&LEFT, &cfg).unwrap().accepted);
    }

    #[test]
    fn disabled_gate_reports_skewness() {
        let cfg = ValidityConfig::new(-1.0, false).unwrap();
        let v = gate_test_scores(&LEFT, &cfg).unwrap();
        assert!(v.accepted);
        assert_eq!(v.reason, VerdictReason::GateDisabled);
        assert!(v.skewness < -2.0);
    }

    #[test]
    fn insufficient_data_is_not_rejection() {
        let cfg = ValidityConfig::default();
        assert!(matches!(
            gate_test_scores(&[1.0, 2.0], &cfg),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            gate_test_scores(&[5.0; 4], &cfg),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn threshold_must_be_negative() {
        assert!(ValidityConfig::new(0.0, true).is_err());
        assert!(ValidityConfig::new(1.0, true).is_err());
    }

    proptest! {
        #[test]
        fn rejection_affine_invariant(
            xs in prop::collection::vec(0.0f64..50.0, 3..30),
            c in 0.1f64..10.0,
            d in -50.0f64..50.0,
        ) {
            prop_assume!(xs.iter().any(|&v| (v - xs[0]).abs() > 1e-3));
            let cfg = ValidityConfig::default();
            let base = gate_test_scores(&xs, &cfg).unwrap();
            prop_assume!((base.skewness + 1.0).abs() > 1e-6);
            let moved: Vec<f64> = xs.iter().map(|x| c * x + d).collect();
            prop_assert_eq!(gate_test_scores(&moved, &cfg).unwrap().accepted, base.accepted);
        }
    }
}
