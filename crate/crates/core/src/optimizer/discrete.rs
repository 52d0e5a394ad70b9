use super::{Diagnostics, OptimalParameter, OptimizationMethod, OptimizationResult};
use crate::costs::{discrete_weights, CostFunction, DiscreteWeights, ExpectedCost};
use crate::error::Result;
use crate::mechanisms::DiscreteStaircase;
use crate::params::PrivacyParams;

/// Visits `V(p_r)` for `r = 1..=Δ` using prefix sums of the weights.
fn for_each_cost(params: &PrivacyParams, weights: &DiscreteWeights, mut visit: impl FnMut(u64, ExpectedCost)) {
    let b = params.b();
    let q = params.one_minus_b();
    let delta = weights.w.len() as u64;
    let total: f64 = weights.w.iter().sum();
    let mut head = 0.0;
    for r in 1..=delta {
        head += weights.w[r as usize - 1];
        let (rf, df) = (r as f64, delta as f64);
        let a_r = q / (2.0 * rf + 2.0 * b * (df - rf) - q);
        visit(
            r,
            ExpectedCost {
                value: a_r * (head + b * (total - head)),
                method: weights.method,
                error_bound: a_r * weights.error_bound,
            },
        );
    }
}

/// `V(p_r)` for every `r = 1..=Δ`.
pub fn discrete_cost_profile(params: &PrivacyParams, cost: &CostFunction) -> Result<Vec<ExpectedCost>> {
    let weights = discrete_weights(params, cost)?;
    let mut out = Vec::with_capacity(weights.w.len());
    for_each_cost(params, &weights, |_, v| out.push(v));
    Ok(out)
}

/// The step index `r*` minimizing `V(p_r)`; ties go to the smallest `r`.
pub fn discrete_r_opt(params: &PrivacyParams, cost: &CostFunction) -> Result<OptimizationResult> {
    let weights = discrete_weights(params, cost)?;
    let mut best: Option<(u64, ExpectedCost)> = None;
    for_each_cost(params, &weights, |r, v| {
        if best.is_none_or(|(_, bv)| v.value < bv.value) {
            best = Some((r, v));
        }
    });
    let (r, value) = best.expect("delta >= 1 yields at least one candidate");
    // report the cost through the mechanism's own normalization
    let mech = DiscreteStaircase::new(*params, r)?;
    Ok(OptimizationResult {
        parameter: OptimalParameter::StepIndex(r),
        cost: ExpectedCost {
            value: weights.cost_for(&mech).value,
            ..value
        },
        method: OptimizationMethod::Enumeration,
        diagnostics: Diagnostics::default(),
    })
}
