//! Additive noise distributions: staircase (continuous and discrete),
//! Laplace and geometric.

mod discrete;
mod laplace;
mod staircase;

pub use discrete::{DiscreteLatent, DiscreteStaircase};
pub use laplace::Laplace;
pub use staircase::{Staircase, StaircaseLatent};

use serde::Serialize;

use crate::params::PrivacyParams;
use crate::rng::UniformSource;

/// A realized noise value with the latent draws that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSample<V> {
    pub value: V,
    pub trace: Option<SampleTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SampleTrace {
    Staircase(StaircaseLatent),
    Laplace { uniform: f64 },
    Discrete(DiscreteLatent),
}

/// A continuous noise density with an analytic CDF.
pub trait ContinuousNoise: Sync {
    fn params(&self) -> &PrivacyParams;

    fn label(&self) -> String;

    /// Density at a finite point.
    fn density(&self, x: f64) -> f64;

    /// Cumulative distribution at a finite point.
    fn distribution(&self, x: f64) -> f64;

    /// Probability of `[lo, hi)`.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        (self.distribution(hi) - self.distribution(lo)).max(0.0)
    }

    /// Sorted piece boundaries inside `[lo, hi]` when the density is
    /// piecewise constant, `None` otherwise.
    fn breakpoints(&self, _lo: f64, _hi: f64) -> Option<Vec<f64>> {
        None
    }
}

/// A continuous density that can also be sampled.
pub trait NoiseSampler: ContinuousNoise {
    fn sample_value(&self, rng: &mut dyn UniformSource) -> f64;
}

impl NoiseSampler for Staircase {
    fn sample_value(&self, rng: &mut dyn UniformSource) -> f64 {
        self.sample(rng).value
    }
}

impl NoiseSampler for Laplace {
    fn sample_value(&self, rng: &mut dyn UniformSource) -> f64 {
        self.sample(rng).value
    }
}

/// `b^k` for a non-negative integer power, as `exp(-epsilon * k)`.
pub(crate) fn decay(params: &PrivacyParams, k: f64) -> f64 {
    (-params.epsilon() * k).exp()
}

/// Geometric draw with `Pr[G = i] = (1 - b) b^i` by inverse transform.
pub(crate) fn geometric_from_uniform(params: &PrivacyParams, u: f64) -> u64 {
    // ln(1 - u) / ln(b), with ln(b) = -epsilon
    let g = ((-u).ln_1p() / -params.epsilon()).floor();
    if g.is_finite() && g >= 0.0 {
        g.min(u64::MAX as f64) as u64
    } else {
        0
    }
}
