use serde::Serialize;

use super::{ContinuousNoise, NoiseSample, SampleTrace};
use crate::error::{Error, Result};
use crate::params::PrivacyParams;
use crate::rng::UniformSource;

/// Laplace noise with scale `λ = Δ/ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Laplace {
    params: PrivacyParams,
    lambda: f64,
}

impl Laplace {
    pub fn new(params: PrivacyParams) -> Self {
        Self {
            params,
            lambda: params.delta() / params.epsilon(),
        }
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        Ok(self.density(x))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        Ok(self.distribution(x))
    }

    /// Inverse CDF at `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u < 0.5 {
            self.lambda * (2.0 * u).ln()
        } else {
            -self.lambda * (2.0 * (1.0 - u)).ln()
        }
    }

    pub fn sample<R: UniformSource + ?Sized>(&self, rng: &mut R) -> NoiseSample<f64> {
        // u = 0 maps to -inf; redraw it
        let mut u = rng.next_uniform();
        while u <= 0.0 {
            u = rng.next_uniform();
        }
        NoiseSample {
            value: self.quantile(u),
            trace: Some(SampleTrace::Laplace { uniform: u }),
        }
    }

    fn tail(&self, y: f64) -> f64 {
        // mass of (y, inf) for y >= 0
        0.5 * (-y / self.lambda).exp()
    }
}

impl ContinuousNoise for Laplace {
    fn params(&self) -> &PrivacyParams {
        &self.params
    }

    fn label(&self) -> String {
        "laplace".to_string()
    }

    fn density(&self, x: f64) -> f64 {
        (-x.abs() / self.lambda).exp() / (2.0 * self.lambda)
    }

    fn distribution(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.tail(-x)
        } else {
            1.0 - self.tail(x)
        }
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let m = if lo >= 0.0 {
            self.tail(lo) - self.tail(hi)
        } else if hi <= 0.0 {
            self.tail(-hi) - self.tail(-lo)
        } else {
            1.0 - self.tail(-lo) - self.tail(hi)
        };
        m.max(0.0)
    }
}
