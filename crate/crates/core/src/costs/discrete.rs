use serde::Serialize;

use super::series::{binomial_row, MomentSeries};
use super::{CostFunction, CostMethod, ExpectedCost};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::DiscreteStaircase;
use crate::params::PrivacyParams;

/// Largest sensitivity for which per-offset weights are materialized.
const MAX_WEIGHT_DELTA: u64 = 1 << 24;

/// Per-offset cost weights of the discrete staircase family.
///
/// `w_0 = L(0) + 2 Σ_{k>=1} L(kΔ) b^k` and `w_i = 2 Σ_{k>=0} L(i + kΔ) b^k`,
/// so that `V(p_r) = a_r (Σ_{i<r} w_i + b Σ_{i>=r} w_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteWeights {
    pub w: Vec<f64>,
    /// Bound on the total weight omitted by truncation.
    pub error_bound: f64,
    pub method: CostMethod,
}

impl DiscreteWeights {
    /// Expected cost of one member of the family.
    pub fn cost_for(&self, mech: &DiscreteStaircase) -> ExpectedCost {
        let r = mech.r() as usize;
        let b = mech.params().b();
        let head: f64 = self.w[..r].iter().sum();
        let tail: f64 = self.w[r..].iter().sum();
        ExpectedCost {
            value: mech.a_r() * (head + b * tail),
            method: self.method,
            error_bound: mech.a_r() * self.error_bound,
        }
    }
}

/// Computes the weights `w_0..w_{Δ-1}` for an integer sensitivity.
pub fn discrete_weights(params: &PrivacyParams, cost: &CostFunction) -> Result<DiscreteWeights> {
    let delta = params.integer_delta()?;
    if delta > MAX_WEIGHT_DELTA {
        return Err(invalid(
            "delta",
            format!("at most {MAX_WEIGHT_DELTA} for discrete optimization"),
        ));
    }
    match cost.power() {
        Some(m) => series_weights(params, delta, m),
        None => truncated_weights(params, delta, cost),
    }
}

/// `w_i = 2 Σ_j C(m, j) i^(m-j) Δ^j c_j`, and `w_0 = 2 Δ^m c_m`.
fn series_weights(params: &PrivacyParams, delta: u64, m: u32) -> Result<DiscreteWeights> {
    let m = m as usize;
    let row = binomial_row(m)?;
    let c = MomentSeries::with_complement(params.b(), params.one_minus_b(), m)?;
    let d = delta as f64;
    let dj: Vec<f64> = (0..=m).map(|j| d.powi(j as i32) * c.get(j)).collect();
    let w: Vec<f64> = (0..delta)
        .map(|i| {
            if i == 0 {
                return 2.0 * dj[m];
            }
            let x = i as f64;
            2.0 * (0..=m)
                .map(|j| row[j] as f64 * x.powi((m - j) as i32) * dj[j])
                .sum::<f64>()
        })
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!(
            "moment {m} weights overflow at epsilon = {}",
            params.epsilon()
        )));
    }
    Ok(DiscreteWeights {
        w,
        error_bound: 0.0,
        method: CostMethod::Series,
    })
}

/// Direct sums over the table, with the beyond-table remainder bounded by
/// the growth envelope and reported as error.
fn truncated_weights(params: &PrivacyParams, delta: u64, cost: &CostFunction) -> Result<DiscreteWeights> {
    let limit = cost.support_limit().unwrap_or(f64::INFINITY);
    let ratio = cost.growth().ratio;
    let log_step = ratio.ln() * delta as f64 - params.epsilon();
    let mut error_bound = 0.0;
    let mut w = Vec::with_capacity(delta as usize);
    for i in 0..delta {
        let mut sum = 0.0;
        let mut k = 0u64;
        loop {
            let x = (i + k * delta) as f64;
            if x > limit {
                break;
            }
            let term = cost.eval(x) * (-params.epsilon() * k as f64).exp();
            sum += if i == 0 && k == 0 { term / 2.0 } else { term };
            k += 1;
        }
        // remainder: Σ_{j>=k} L(i + jΔ) b^j with L(x + Δ) <= B^Δ L(x) past the table
        let x = (i + k * delta) as f64;
        let first = cost.eval(x) * (-params.epsilon() * k as f64).exp();
        if first > 0.0 {
            if log_step >= 0.0 {
                return Err(Error::Uncertifiable(format!(
                    "growth bound B = {ratio} outpaces the decay: b·B^delta >= 1"
                )));
            }
            error_bound += 2.0 * first / -log_step.exp_m1();
        }
        w.push(2.0 * sum);
    }
    Ok(DiscreteWeights {
        w,
        error_bound,
        method: CostMethod::Quadrature,
    })
}

/// `V(p_r)` for the discrete staircase with step index `r`.
pub fn discrete_cost(params: &PrivacyParams, r: u64, cost: &CostFunction) -> Result<ExpectedCost> {
    let mech = DiscreteStaircase::new(*params, r)?;
    Ok(discrete_weights(params, cost)?.cost_for(&mech))
}
