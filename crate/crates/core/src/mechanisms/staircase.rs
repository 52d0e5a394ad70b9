use serde::Serialize;

use super::{decay, geometric_from_uniform, ContinuousNoise, NoiseSample, SampleTrace};
use crate::error::{invalid, Error, Result};
use crate::params::PrivacyParams;
use crate::rng::UniformSource;

/// Continuous staircase distribution.
///
/// Density `a(γ)` on `[0, γΔ)`, `b·a(γ)` on `[γΔ, Δ)`, decaying by `b` every
/// period of length `Δ` and mirrored for `x < 0`. Pieces are half-open, so
/// at a breakpoint the density takes the value of the piece to its right
/// (for `x >= 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Staircase {
    params: PrivacyParams,
    gamma: f64,
    a_gamma: f64,
}

/// Latent draws of the four-variable sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaircaseLatent {
    /// Sign, `+1` or `-1`.
    pub sign: i8,
    /// Period index.
    pub period: u64,
    /// Position inside the chosen sub-interval, in `[0, 1]`.
    pub uniform: f64,
    /// `false` selects the high sub-interval `[G, G+γ)`, `true` the low one.
    pub upper: bool,
}

impl Staircase {
    pub fn new(params: PrivacyParams, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
        }
        let b = params.b();
        let a_gamma = params.one_minus_b() / (2.0 * params.delta() * (gamma + b * (1.0 - gamma)));
        Ok(Self { params, gamma, a_gamma })
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Normalizing constant `a(γ)`, the density on `[0, γΔ)`.
    pub fn a_gamma(&self) -> f64 {
        self.a_gamma
    }

    /// Total mass from the closed form `2·a(γ)·Δ·(γ + b(1-γ)) / (1-b)`.
    pub fn total_mass(&self) -> f64 {
        let b = self.params.b();
        2.0 * self.a_gamma * self.params.delta() * (self.gamma + b * (1.0 - self.gamma)) / self.params.one_minus_b()
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

    /// Step level of `|x|`: density is `a(γ)·b^level`.
    pub fn level(&self, x: f64) -> f64 {
        let (k, t) = self.split(x.abs());
        if t < self.gamma * self.params.delta() {
            k
        } else {
            k + 1.0
        }
    }

    /// Period index and offset of a non-negative point.
    fn split(&self, y: f64) -> (f64, f64) {
        let delta = self.params.delta();
        let mut k = (y / delta).floor();
        let mut t = y - k * delta;
        if t < 0.0 {
            k -= 1.0;
            t += delta;
        } else if t >= delta {
            k += 1.0;
            t -= delta;
        }
        (k, t)
    }

    /// Mass of `[0, y]` for `y >= 0`.
    fn half_mass(&self, y: f64) -> f64 {
        let delta = self.params.delta();
        let (k, t) = self.split(y);
        let full = -0.5 * (-self.params.epsilon() * k).exp_m1();
        let high = t.min(self.gamma * delta);
        let low = (t - self.gamma * delta).max(0.0);
        full + self.a_gamma * decay(&self.params, k) * (high + self.params.b() * low)
    }

    /// Algorithm output for a given set of latent draws.
    pub fn from_latent(&self, latent: &StaircaseLatent) -> f64 {
        let delta = self.params.delta();
        let g = latent.period as f64;
        let magnitude = if latent.upper {
            (g + self.gamma + (1.0 - self.gamma) * latent.uniform) * delta
        } else {
            (g + self.gamma * latent.uniform) * delta
        };
        f64::from(latent.sign) * magnitude
    }

    /// Draws `S`, `G`, `U`, `B` in that order and combines them.
    pub fn sample<R: UniformSource + ?Sized>(&self, rng: &mut R) -> NoiseSample<f64> {
        let sign = if rng.next_uniform() < 0.5 { 1 } else { -1 };
        let period = geometric_from_uniform(&self.params, rng.next_uniform());
        let uniform = rng.next_uniform();
        let u_b = rng.next_uniform();
        let upper = if self.gamma == 0.0 {
            true
        } else if self.gamma == 1.0 {
            false
        } else {
            let b = self.params.b();
            let p_high = self.gamma / (self.gamma + (1.0 - self.gamma) * b);
            u_b >= p_high
        };
        let latent = StaircaseLatent {
            sign,
            period,
            uniform,
            upper,
        };
        NoiseSample {
            value: self.from_latent(&latent),
            trace: Some(SampleTrace::Staircase(latent)),
        }
    }
}

impl ContinuousNoise for Staircase {
    fn params(&self) -> &PrivacyParams {
        &self.params
    }

    fn label(&self) -> String {
        "staircase".to_string()
    }

    fn density(&self, x: f64) -> f64 {
        self.a_gamma * decay(&self.params, self.level(x))
    }

    fn distribution(&self, x: f64) -> f64 {
        if x >= 0.0 {
            0.5 + self.half_mass(x)
        } else {
            0.5 - self.half_mass(-x)
        }
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let m = if lo >= 0.0 {
            self.half_mass(hi) - self.half_mass(lo)
        } else if hi <= 0.0 {
            self.half_mass(-lo) - self.half_mass(-hi)
        } else {
            self.half_mass(-lo) + self.half_mass(hi)
        };
        m.max(0.0)
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Option<Vec<f64>> {
        let delta = self.params.delta();
        let k_lo = (lo / delta).floor() as i64 - 1;
        let k_hi = (hi / delta).ceil() as i64 + 1;
        let mut points = Vec::new();
        for k in k_lo..=k_hi {
            let base = k as f64 * delta;
            // positive side pieces split at kΔ + γΔ; negative side at kΔ - γΔ
            let split = if k >= 0 {
                base + self.gamma * delta
            } else {
                base + (1.0 - self.gamma) * delta
            };
            for p in [base, split] {
                if p >= lo && p <= hi {
                    points.push(p);
                }
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Some(points)
    }
}
