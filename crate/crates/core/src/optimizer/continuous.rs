use super::golden::{golden_section, GoldenSearch};
use super::{Diagnostics, OptimalParameter, OptimizationMethod, OptimizationResult, CROSS_CHECK_TOL};
use crate::costs::{
    binomial_row, staircase_cost, staircase_cost_abs, staircase_cost_excess, staircase_cost_moment,
    staircase_cost_square, CostFunction, MomentSeries, MAX_MOMENT,
};
use crate::error::{invalid, Result};
use crate::params::PrivacyParams;

/// Bracket width for the generic golden-section path.
const GENERIC_TOL: f64 = 1e-8;

/// Sub-intervals scanned for sign changes of the stationarity polynomial.
const SCAN_CELLS: usize = 256;

/// Relative spread below which a cost curve counts as flat in `γ`.
const FLAT_REL: f64 = 1e-12;

fn gamma_result(
    gamma: f64,
    cost: crate::costs::ExpectedCost,
    method: OptimizationMethod,
    diagnostics: Diagnostics,
) -> OptimizationResult {
    OptimizationResult {
        parameter: OptimalParameter::Gamma(gamma),
        cost,
        method,
        diagnostics,
    }
}

/// Golden-section argmin of `V(p_γ) - V(p_0)` for a power cost.
fn golden_excess(params: &PrivacyParams, cost: &CostFunction) -> Result<GoldenSearch> {
    golden_section(|g| staircase_cost_excess(params, g, cost), 0.0, 1.0, CROSS_CHECK_TOL)
}

/// Optimal `γ` for `L(x) = |x|`: `1 / (1 + e^(ε/2))`.
pub fn gamma_opt_abs(params: &PrivacyParams) -> Result<OptimizationResult> {
    let gamma = 1.0 / (1.0 + (params.epsilon() / 2.0).exp());
    let cost = staircase_cost_abs(params, gamma)?;
    let golden = golden_excess(params, &CostFunction::Abs)?;
    let poly = moment_stationarity(params, 1)?;
    let diagnostics = Diagnostics {
        residual: Some(horner(&poly, gamma).abs()),
        golden_deviation: Some((golden.x - gamma).abs()),
        ..Diagnostics::default()
    };
    Ok(gamma_result(gamma, cost, OptimizationMethod::ClosedForm, diagnostics))
}

/// Left side of the cubic whose root in `[0, 1]` is the optimal `γ` for `x²`.
pub fn square_cubic_residual(params: &PrivacyParams, gamma: f64) -> f64 {
    let b = params.b();
    let q = params.one_minus_b();
    2.0 / 3.0 * q * q * gamma.powi(3) + 2.0 * b * q * gamma * gamma + 2.0 * b * b * gamma - (2.0 * b * b + b) / 3.0
}

/// Optimal `γ` for `L(x) = x²`.
///
/// With `c = (b(1+b)/2)^(1/3)`, `γ* = (c - b)/(1 - b)`; the numerator is
/// rewritten as `(c³ - b³)/(c² + bc + b²)` so nothing cancels as `b → 1`.
pub fn gamma_opt_square(params: &PrivacyParams) -> Result<OptimizationResult> {
    let b = params.b();
    let c = (b * (1.0 + b) / 2.0).cbrt();
    let gamma = b * (1.0 + 2.0 * b) / (2.0 * (c * c + b * c + b * b));
    let cost = staircase_cost_square(params, gamma)?;
    let golden = golden_excess(params, &CostFunction::Square)?;
    let diagnostics = Diagnostics {
        residual: Some(square_cubic_residual(params, gamma).abs()),
        golden_deviation: Some((golden.x - gamma).abs()),
        ..Diagnostics::default()
    };
    Ok(gamma_result(gamma, cost, OptimizationMethod::ClosedForm, diagnostics))
}

/// Coefficients, lowest degree first and scaled to unit max-norm, of the
/// polynomial whose roots in `[0, 1]` are the stationary points of
/// `V(p_γ)` for `L(x) = |x|^m`.
pub fn moment_stationarity(params: &PrivacyParams, m: u32) -> Result<Vec<f64>> {
    if m == 0 || m > MAX_MOMENT {
        return Err(invalid(
            "m",
            format!("moment order must lie in [1, {MAX_MOMENT}], got {m}"),
        ));
    }
    let n = m as usize + 1;
    let row = binomial_row(n)?;
    let c = MomentSeries::with_complement(params.b(), params.one_minus_b(), n)?;
    let b = params.b();
    let q = params.one_minus_b();
    let mut coef = vec![0.0; n + 1];
    coef[n] = c.get(0) * (n - 1) as f64 * q * q;
    for i in 1..n {
        coef[i] = row[i] as f64 * c.get(n - i) * (i as f64 - 1.0) * q * q
            + row[i + 1] as f64 * c.get(n - i - 1) * (i + 1) as f64 * q * b;
    }
    coef[0] = -(2..=n).map(|i| row[i] as f64 * c.get(n - i)).sum::<f64>() * b * q;
    let scale = coef.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if !scale.is_finite() || scale == 0.0 {
        return Err(crate::error::Error::Overflow(format!(
            "stationarity polynomial for m = {m} is not representable at epsilon = {}",
            params.epsilon()
        )));
    }
    Ok(coef.into_iter().map(|v| v / scale).collect())
}

fn horner(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Bisects `[lo, hi]` (with `p(lo)`, `p(hi)` of opposite sign) down to
/// adjacent floating-point numbers.
fn bisect(coef: &[f64], mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut f_lo = horner(coef, lo);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = horner(coef, mid);
        if f_mid == 0.0 {
            return (mid, 0.0);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), hi - lo)
}

/// Optimal `γ` for `L(x) = |x|^m` from the stationarity polynomial.
///
/// Brackets are found by scanning `[0, 1]`; among all roots the one with
/// the smallest cost is kept. Without a sign change the search falls back
/// to golden-section and says so in the diagnostics.
pub fn gamma_opt_moment(params: &PrivacyParams, m: u32) -> Result<OptimizationResult> {
    let coef = moment_stationarity(params, m)?;
    let cost_fn = CostFunction::Moment(m);
    let golden = golden_excess(params, &cost_fn)?;
    let grid: Vec<f64> = (0..=SCAN_CELLS).map(|j| j as f64 / SCAN_CELLS as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| horner(&coef, x)).collect();
    let mut roots = Vec::new();
    for j in 0..SCAN_CELLS {
        if values[j] == 0.0 {
            roots.push((grid[j], 0.0));
        } else if values[j + 1] != 0.0 && (values[j] < 0.0) != (values[j + 1] < 0.0) {
            roots.push(bisect(&coef, grid[j], grid[j + 1]));
        }
    }
    if values[SCAN_CELLS] == 0.0 {
        roots.push((1.0, 0.0));
    }

    let mut best: Option<(f64, f64, f64)> = None;
    for (root, width) in roots {
        let v = staircase_cost_moment(params, root, m)?.value;
        if best.is_none_or(|(_, _, bv)| v < bv) {
            best = Some((root, width, v));
        }
    }
    match best {
        Some((gamma, width, _)) => {
            let diagnostics = Diagnostics {
                residual: Some(horner(&coef, gamma).abs()),
                bracket_width: Some(width),
                golden_deviation: Some((golden.x - gamma).abs()),
                ..Diagnostics::default()
            };
            Ok(gamma_result(
                gamma,
                staircase_cost_moment(params, gamma, m)?,
                OptimizationMethod::PolynomialRoot,
                diagnostics,
            ))
        }
        None => {
            let diagnostics = Diagnostics {
                residual: Some(horner(&coef, golden.x).abs()),
                bracket_width: Some(golden.bracket_width),
                golden_deviation: Some(0.0),
                fallback: true,
                ..Diagnostics::default()
            };
            Ok(gamma_result(
                golden.x,
                staircase_cost_moment(params, golden.x, m)?,
                OptimizationMethod::GoldenSection,
                diagnostics,
            ))
        }
    }
}

/// Golden-section minimization of `V(p_γ)` for any cost.
pub fn gamma_opt_generic(params: &PrivacyParams, cost: &CostFunction) -> Result<OptimizationResult> {
    let search = golden_section(|g| Ok(staircase_cost(params, g, cost)?.value), 0.0, 1.0, GENERIC_TOL)?;
    let value = staircase_cost(params, search.x, cost)?;
    let diagnostics = Diagnostics {
        bracket_width: Some(search.bracket_width),
        flat: search.spread <= FLAT_REL * search.value.abs(),
        unimodality_assumed: cost.power().is_none(),
        ..Diagnostics::default()
    };
    Ok(gamma_result(
        search.x,
        value,
        OptimizationMethod::GoldenSection,
        diagnostics,
    ))
}

/// Optimal `γ` by the best method available for the cost.
pub fn gamma_opt(params: &PrivacyParams, cost: &CostFunction) -> Result<OptimizationResult> {
    match cost {
        CostFunction::Abs => gamma_opt_abs(params),
        CostFunction::Square => gamma_opt_square(params),
        CostFunction::Moment(m) => gamma_opt_moment(params, *m),
        CostFunction::Tabulated(_) => gamma_opt_generic(params, cost),
    }
}

/// The heuristic `γ = e^(-ε)/2`, with its cost under `cost`.
pub fn gamma_heuristic(params: &PrivacyParams, cost: &CostFunction) -> Result<OptimizationResult> {
    let gamma = params.b() / 2.0;
    let value = staircase_cost(params, gamma, cost)?;
    Ok(gamma_result(
        gamma,
        value,
        OptimizationMethod::Heuristic,
        Diagnostics::default(),
    ))
}

/// `Pr[|X| <= γΔ]` under the heuristic `γ`: `(b - b²)/(3b - b²)`.
pub fn heuristic_small_noise_probability(params: &PrivacyParams) -> f64 {
    let q = params.one_minus_b();
    q / (2.0 + q)
}
