use serde::Serialize;

use crate::error::{invalid, Result};

/// Privacy level and query sensitivity shared by every mechanism.
///
/// `b = exp(-epsilon)` is the per-period decay factor; `1 - b` is kept
/// separately (via `expm1`) so that small-epsilon formulas do not cancel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
    b: f64,
    #[serde(skip)]
    one_minus_b: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid(
                "epsilon",
                format!("must be positive and finite, got {epsilon}"),
            ));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid("delta", format!("must be positive and finite, got {delta}")));
        }
        let b = (-epsilon).exp();
        if b <= 0.0 {
            return Err(invalid("epsilon", format!("exp(-{epsilon}) underflows to zero")));
        }
        Ok(Self {
            epsilon,
            delta,
            b,
            one_minus_b: -(-epsilon).exp_m1(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `exp(-epsilon)`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `1 - exp(-epsilon)`, computed without cancellation.
    pub fn one_minus_b(&self) -> f64 {
        self.one_minus_b
    }

    /// The multiplicative DP bound `exp(epsilon)`.
    pub fn ratio_bound(&self) -> f64 {
        self.epsilon.exp()
    }

    /// Same epsilon with a different sensitivity.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.epsilon, delta)
    }

    /// Sensitivity as a positive integer, for integer-valued mechanisms.
    pub fn integer_delta(&self) -> Result<u64> {
        if self.delta < 1.0 || self.delta.fract() != 0.0 || self.delta > (1u64 << 53) as f64 {
            return Err(invalid(
                "delta",
                format!("must be an integer >= 1 for discrete mechanisms, got {}", self.delta),
            ));
        }
        Ok(self.delta as u64)
    }

    /// Number of whole periods `K` after which `b^K` drops below `rel`.
    pub fn tail_periods(&self, rel: f64) -> usize {
        (rel.ln() / -self.epsilon).ceil().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_is_exp_minus_epsilon() {
        let p = PrivacyParams::new(2.0_f64.ln(), 1.0).unwrap();
        assert_eq!(p.b(), (-(2.0_f64.ln())).exp());
        assert!((p.b() - 0.5).abs() < 1e-16);
        assert!((p.one_minus_b() - 0.5).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PrivacyParams::new(0.0, 1.0).is_err());
        assert!(PrivacyParams::new(-1.0, 1.0).is_err());
        assert!(PrivacyParams::new(f64::NAN, 1.0).is_err());
        assert!(PrivacyParams::new(1.0, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn small_epsilon_complement_is_accurate() {
        let p = PrivacyParams::new(1e-10, 1.0).unwrap();
        assert!((p.one_minus_b() / 1e-10 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integer_delta() {
        assert_eq!(PrivacyParams::new(1.0, 3.0).unwrap().integer_delta().unwrap(), 3);
        assert!(PrivacyParams::new(1.0, 2.5).unwrap().integer_delta().is_err());
        assert!(PrivacyParams::new(1.0, 0.5).unwrap().integer_delta().is_err());
    }
}
