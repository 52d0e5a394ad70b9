use super::quadrature::integrate;
use super::series::{binomial_row, MomentSeries};
use super::{CostFunction, CostMethod, ExpectedCost};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::Staircase;
use crate::params::PrivacyParams;

/// Relative tail target for the quadrature path.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

/// Tail level at which further periods no longer change the sum.
const TIGHT_REL_TOL: f64 = 1e-17;

/// Hard cap on integrated periods.
const MAX_PERIODS: usize = 2_000_000;

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")))
    }
}

/// `V(p_γ)` for `L(x) = |x|`.
pub fn staircase_cost_abs(params: &PrivacyParams, gamma: f64) -> Result<ExpectedCost> {
    check_gamma(gamma)?;
    let b = params.b();
    let q = params.one_minus_b();
    let g = (b + q * gamma * gamma) / (b + q * gamma);
    let value = params.delta() * (b / q + 0.5 * g);
    Ok(ExpectedCost::exact(value, CostMethod::ClosedForm))
}

/// `V(p_γ)` for `L(x) = x²`.
pub fn staircase_cost_square(params: &PrivacyParams, gamma: f64) -> Result<ExpectedCost> {
    check_gamma(gamma)?;
    let b = params.b();
    let q = params.one_minus_b();
    let den = b + q * gamma;
    let value = params.delta().powi(2)
        * ((b * b + b) / (q * q) + (b + q * gamma * gamma) / den * (b / q) + (b + q * gamma.powi(3)) / (3.0 * den));
    Ok(ExpectedCost::exact(value, CostMethod::ClosedForm))
}

/// Series terms shared by the moment cost and its excess form.
fn moment_terms(params: &PrivacyParams, m: u32) -> Result<(usize, Vec<u128>, MomentSeries)> {
    if m == 0 || m > super::MAX_MOMENT {
        return Err(invalid(
            "m",
            format!("moment order must lie in [1, {}], got {m}", super::MAX_MOMENT),
        ));
    }
    let n = m as usize + 1;
    let row = binomial_row(n)?;
    let c = MomentSeries::with_complement(params.b(), params.one_minus_b(), n)?;
    Ok((n, row, c))
}

fn scale_power(params: &PrivacyParams, m: u32) -> Result<f64> {
    let log_scale = f64::from(m) * params.delta().ln();
    if log_scale > 700.0 {
        return Err(Error::Overflow(format!("delta^{m} exceeds the floating-point range")));
    }
    Ok(params.delta().powi(m as i32))
}

/// `V(p_γ)` for `L(x) = |x|^m` through the moment series.
pub fn staircase_cost_moment(params: &PrivacyParams, gamma: f64, m: u32) -> Result<ExpectedCost> {
    check_gamma(gamma)?;
    let (n, row, c) = moment_terms(params, m)?;
    let scale = scale_power(params, m)?;
    let b = params.b();
    let q = params.one_minus_b();
    let den = gamma * q + b;
    let sum: f64 = (1..=n)
        .map(|i| row[i] as f64 * c.get(n - i) * (gamma.powi(i as i32) * q + b) / den)
        .sum();
    let value = scale * q / n as f64 * sum;
    if !value.is_finite() {
        return Err(Error::Overflow(format!(
            "moment {m} cost overflows at epsilon = {}",
            params.epsilon()
        )));
    }
    Ok(ExpectedCost::exact(value, CostMethod::Series))
}

/// `V(p_γ) - V(p_0)` for the power costs, in a form free of cancellation.
///
/// The argmin over γ is that of `V` itself; the offset removes the large
/// γ-independent part so that a bracketing minimizer can resolve γ finely.
pub fn staircase_cost_excess(params: &PrivacyParams, gamma: f64, cost: &CostFunction) -> Result<f64> {
    check_gamma(gamma)?;
    let m = cost.power().ok_or_else(|| Error::Unsupported(cost.to_string()))?;
    let (n, row, c) = moment_terms(params, m)?;
    let scale = scale_power(params, m)?;
    let b = params.b();
    let q = params.one_minus_b();
    let den = gamma * q + b;
    // γ^i - γ = -γ(1-γ)(1 + γ + ... + γ^(i-2))
    let mut geometric = 0.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for (i, &coef) in row.iter().enumerate().take(n + 1).skip(2) {
        geometric += power;
        power *= gamma;
        sum += coef as f64 * c.get(n - i) * geometric;
    }
    Ok(-scale * q * q / n as f64 * gamma * (1.0 - gamma) * sum / den)
}

/// Dispatches to the closed form for power costs, quadrature otherwise.
pub fn staircase_cost(params: &PrivacyParams, gamma: f64, cost: &CostFunction) -> Result<ExpectedCost> {
    match cost {
        CostFunction::Abs => staircase_cost_abs(params, gamma),
        CostFunction::Square => staircase_cost_square(params, gamma),
        CostFunction::Moment(m) => staircase_cost_moment(params, gamma, *m),
        CostFunction::Tabulated(_) => staircase_cost_quadrature(params, gamma, cost),
    }
}

/// `∫ L(x) w(x) dx` over `[lo, hi]`, split at table knots.
fn integrate_cost<W: Fn(f64) -> f64>(cost: &CostFunction, lo: f64, hi: f64, weight: &W) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    match cost {
        CostFunction::Tabulated(t) => {
            let mut acc = 0.0;
            let mut left = lo;
            for &k in t.knots_between(lo, hi) {
                acc += integrate(|x| cost.eval(x) * weight(x), left, k);
                left = k;
            }
            acc + integrate(|x| cost.eval(x) * weight(x), left, hi)
        }
        _ => integrate(|x| cost.eval(x) * weight(x), lo, hi),
    }
}

/// `∫ L` over a piece where the staircase density is constant. Tabulated
/// costs are piecewise linear there, so the table integral is exact.
fn piece_integral(cost: &CostFunction, lo: f64, hi: f64) -> f64 {
    match cost {
        CostFunction::Tabulated(t) if hi > lo => t.integral(lo, hi),
        CostFunction::Tabulated(_) => 0.0,
        _ => integrate_cost(cost, lo, hi, &|_| 1.0),
    }
}

/// One-sided integral of `L·p` over `[0, ∞)` for a symmetric density whose
/// mass on period `j` is `(1-b) b^j / 2`.
///
/// `period` integrates `L·p` over period `k` clipped to `[.., limit]`.
/// Stops once the certified tail falls below the relative target and
/// returns the one-sided value and its tail bound.
fn one_sided<F>(params: &PrivacyParams, cost: &CostFunction, period: F) -> Result<(f64, f64)>
where
    F: Fn(usize, f64) -> f64,
{
    let delta = params.delta();
    let b = params.b();
    let q = params.one_minus_b();
    let limit = cost.support_limit();
    let beyond = match (cost, limit) {
        (CostFunction::Tabulated(t), Some(lim)) => tabulated_tail(params, t.max_value(), t.growth().ratio, lim)?,
        _ => 0.0,
    };
    let mut total = 0.0;
    let mut last_tail = f64::INFINITY;
    for k in 0..MAX_PERIODS {
        let clip = limit.unwrap_or(f64::INFINITY);
        total += period(k, clip);
        let next = (k + 1) as f64 * delta;
        let tail = match (cost, limit) {
            (CostFunction::Tabulated(t), Some(lim)) => {
                if next >= lim {
                    return Ok((total, beyond));
                }
                0.5 * b.powi(k as i32 + 1) * t.max_value() + beyond
            }
            _ => match cost.step_ratio(next, delta) {
                Some(rho) if b * rho < 1.0 => {
                    0.5 * q * (-params.epsilon() * (k + 1) as f64).exp() * cost.eval(next + delta) / (1.0 - b * rho)
                }
                _ => f64::INFINITY,
            },
        };
        // run to machine precision while cheap, accept the target at the cap
        if tail <= TIGHT_REL_TOL * total || (total == 0.0 && tail == 0.0) {
            return Ok((total, tail));
        }
        last_tail = tail;
    }
    if last_tail <= QUADRATURE_REL_TOL * total {
        return Ok((total, last_tail));
    }
    Err(Error::Uncertifiable(format!(
        "tail not below {QUADRATURE_REL_TOL:e} after {MAX_PERIODS} periods at epsilon = {}",
        params.epsilon()
    )))
}

/// One-sided tail bound past the last tabulated point from the envelope
/// `L(x) <= L(x_n) B^ceil(x - x_n)`.
fn tabulated_tail(params: &PrivacyParams, last_value: f64, ratio: f64, last: f64) -> Result<f64> {
    if last_value == 0.0 {
        return Ok(0.0);
    }
    let delta = params.delta();
    let growth = ratio.ln() * delta - params.epsilon();
    if growth >= 0.0 {
        return Err(Error::Uncertifiable(format!(
            "growth bound B = {ratio} outpaces the decay: b·B^delta >= 1"
        )));
    }
    let k_last = (last / delta).floor();
    // ½(1-b) L(x_n) B^(Δ - x_n + 1) (b B^Δ)^k / (1 - b B^Δ)
    let log = (0.5 * params.one_minus_b() * last_value).ln() + (delta - last + 1.0) * ratio.ln() + k_last * growth
        - (-growth.exp()).ln_1p();
    Ok(log.exp())
}

/// `V(p_γ)` by per-piece Gauss–Legendre quadrature with a certified tail.
pub fn staircase_cost_quadrature(params: &PrivacyParams, gamma: f64, cost: &CostFunction) -> Result<ExpectedCost> {
    let mech = Staircase::new(*params, gamma)?;
    let delta = params.delta();
    let a = mech.a_gamma();
    let eps = params.epsilon();
    let (half, tail) = one_sided(params, cost, |k, clip| {
        let base = k as f64 * delta;
        let split = base + gamma * delta;
        let high = a * (-eps * k as f64).exp();
        let low = a * (-eps * (k + 1) as f64).exp();
        high * piece_integral(cost, base, split.min(clip))
            + low * piece_integral(cost, split.min(clip), (base + delta).min(clip))
    })?;
    Ok(ExpectedCost {
        value: 2.0 * half,
        method: CostMethod::Quadrature,
        error_bound: 2.0 * tail,
    })
}

/// `V` of the Laplace mechanism in closed form for power costs.
pub fn laplace_cost(params: &PrivacyParams, cost: &CostFunction) -> Result<ExpectedCost> {
    let lambda = params.delta() / params.epsilon();
    let value = match cost {
        CostFunction::Abs => lambda,
        CostFunction::Square => 2.0 * lambda * lambda,
        CostFunction::Moment(m) => {
            // E|X|^m = m! λ^m
            let log = (1..=*m).map(|k| f64::from(k).ln()).sum::<f64>() + f64::from(*m) * lambda.ln();
            if log > 700.0 {
                return Err(Error::Overflow(format!("Laplace moment {m} overflows")));
            }
            log.exp()
        }
        CostFunction::Tabulated(_) => return Err(Error::Unsupported(cost.to_string())),
    };
    Ok(ExpectedCost::exact(value, CostMethod::ClosedForm))
}

/// `V` of the Laplace mechanism by quadrature, for any cost.
pub fn laplace_cost_quadrature(params: &PrivacyParams, cost: &CostFunction) -> Result<ExpectedCost> {
    let delta = params.delta();
    let lambda = delta / params.epsilon();
    let density = |x: f64| (-x / lambda).exp() / (2.0 * lambda);
    // keep the exponential's variation per sub-piece moderate
    let splits = (params.epsilon() / 2.0).ceil().max(1.0) as usize;
    let (half, tail) = one_sided(params, cost, |k, clip| {
        let base = k as f64 * delta;
        let step = delta / splits as f64;
        (0..splits)
            .map(|s| {
                let lo = base + s as f64 * step;
                let hi = if s + 1 == splits { base + delta } else { lo + step };
                integrate_cost(cost, lo.min(clip), hi.min(clip), &density)
            })
            .sum()
    })?;
    Ok(ExpectedCost {
        value: 2.0 * half,
        method: CostMethod::Quadrature,
        error_bound: 2.0 * tail,
    })
}
