use serde::Serialize;

use super::{decay, geometric_from_uniform, NoiseSample, SampleTrace};
use crate::error::{invalid, Result};
use crate::params::PrivacyParams;
use crate::rng::UniformSource;

/// Integer-valued staircase noise.
///
/// `p(i) = a_r·b^k` for `kΔ <= |i| < kΔ + r` and `a_r·b^(k+1)` for
/// `kΔ + r <= |i| < (k+1)Δ`. With `Δ = 1` this is the geometric mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteStaircase {
    params: PrivacyParams,
    delta: u64,
    r: u64,
    a_r: f64,
}

/// Latent draws of the discrete sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteLatent {
    pub sign: i8,
    pub period: u64,
    /// Offset inside the period, in `[0, Δ)`.
    pub index: u64,
    /// Draws discarded because they produced `-0`.
    pub rejections: u32,
}

impl DiscreteStaircase {
    pub fn new(params: PrivacyParams, r: u64) -> Result<Self> {
        let delta = params.integer_delta()?;
        if r < 1 || r > delta {
            return Err(invalid("r", format!("must lie in [1, {delta}], got {r}")));
        }
        let b = params.b();
        let (rf, df) = (r as f64, delta as f64);
        let a_r = params.one_minus_b() / (2.0 * rf + 2.0 * b * (df - rf) - params.one_minus_b());
        Ok(Self { params, delta, r, a_r })
    }

    /// The geometric mechanism `(1-b)/(1+b)·b^|i|`; requires `Δ = 1`.
    pub fn geometric(params: PrivacyParams) -> Result<Self> {
        if params.delta() != 1.0 {
            return Err(invalid("delta", "geometric requires delta = 1"));
        }
        Self::new(params, 1)
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn a_r(&self) -> f64 {
        self.a_r
    }

    /// Closed-form total mass `a_r (2r + 2b(Δ-r)) / (1-b) - a_r`.
    pub fn total_mass(&self) -> f64 {
        let b = self.params.b();
        let (rf, df) = (self.r as f64, self.delta as f64);
        self.a_r * (2.0 * rf + 2.0 * b * (df - rf)) / self.params.one_minus_b() - self.a_r
    }

    /// Step level of `i`: `p(i) = a_r·b^level`.
    pub fn level(&self, i: i64) -> u64 {
        let m = i.unsigned_abs();
        let k = m / self.delta;
        if m % self.delta < self.r {
            k
        } else {
            k + 1
        }
    }

    pub fn pmf(&self, i: i64) -> f64 {
        self.a_r * decay(&self.params, self.level(i) as f64)
    }

    /// Probability of `X <= i`.
    pub fn cdf(&self, i: i64) -> f64 {
        if i >= 0 {
            1.0 - self.upper_tail(i.unsigned_abs() + 1)
        } else {
            self.upper_tail(i.unsigned_abs())
        }
    }

    /// Probability of `X >= m` for `m >= 1`.
    fn upper_tail(&self, m: u64) -> f64 {
        let b = self.params.b();
        let k = m / self.delta;
        let j = m % self.delta;
        // whole periods from k onward, minus the first j entries of period k
        let period_mass = self.a_r * (self.r as f64 + b * (self.delta - self.r) as f64);
        let head = self.a_r * (j.min(self.r) as f64 + b * j.saturating_sub(self.r) as f64);
        decay(&self.params, k as f64) * (period_mass / self.params.one_minus_b() - head)
    }

    /// Algorithm output for a given set of latent draws.
    pub fn from_latent(&self, latent: &DiscreteLatent) -> i64 {
        let m = latent.period * self.delta + latent.index;
        i64::from(latent.sign) * m as i64
    }

    /// Sign, geometric period, and a within-period index weighted `1` for
    /// the first `r` offsets and `b` for the rest. A draw of magnitude zero
    /// with negative sign is rejected so that `0` is not double counted.
    pub fn sample<R: UniformSource + ?Sized>(&self, rng: &mut R) -> NoiseSample<i64> {
        let b = self.params.b();
        let (rf, df) = (self.r as f64, self.delta as f64);
        let weight = rf + b * (df - rf);
        let mut rejections = 0u32;
        loop {
            let sign: i8 = if rng.next_uniform() < 0.5 { 1 } else { -1 };
            let period = geometric_from_uniform(&self.params, rng.next_uniform());
            let w = rng.next_uniform() * weight;
            let index = if w < rf {
                (w.floor() as u64).min(self.r - 1)
            } else {
                (self.r + ((w - rf) / b).floor() as u64).min(self.delta - 1)
            };
            if sign < 0 && period == 0 && index == 0 {
                rejections += 1;
                continue;
            }
            let latent = DiscreteLatent {
                sign,
                period,
                index,
                rejections,
            };
            return NoiseSample {
                value: self.from_latent(&latent),
                trace: Some(SampleTrace::Discrete(latent)),
            };
        }
    }
}
