use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mechanisms::{ContinuousNoise, DiscreteStaircase};
use crate::params::PrivacyParams;

/// Relative slack allowed above `e^ε` before an audit fails.
pub const RATIO_REL_TOL: f64 = 1e-12;

/// Tail mass beyond which the audit window stops.
const WINDOW_TAIL: f64 = 1e-9;

/// Cap on audited periods per side.
const MAX_AUDIT_PERIODS: usize = 10_000;

/// Pieces exactly `Δ` apart touch only at a point; this margin keeps
/// rounded breakpoints from pairing them.
const TOUCH_REL: f64 = 1e-9;

/// Offset placed on either side of every breakpoint in grid mode.
const BREAKPOINT_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AuditGrid {
    /// Every compatible pair of constant pieces.
    ExactCells {
        cells: usize,
        pairs: usize,
    },
    Points {
        x_points: usize,
        d_points: usize,
    },
    Discrete {
        span: u64,
        d_points: usize,
    },
}

/// Largest density ratio `f(x)/f(x+d)` over the audited `(x, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioAudit {
    pub max_ratio: f64,
    /// `e^ε`.
    pub bound: f64,
    /// `max_ratio / e^ε - 1`.
    pub slack: f64,
    pub grid: AuditGrid,
    /// A pair `(x, d)` attaining the maximum.
    pub witness: Option<(f64, f64)>,
    pub passed: bool,
}

impl RatioAudit {
    fn finish(params: &PrivacyParams, best: Option<(f64, f64, f64)>, grid: AuditGrid) -> Self {
        let bound = params.ratio_bound();
        let (max_ratio, witness) = match best {
            Some((r, x, d)) => (r, Some((x, d))),
            None => (1.0, None),
        };
        let slack = max_ratio / bound - 1.0;
        Self {
            max_ratio,
            bound,
            slack,
            grid,
            witness,
            passed: max_ratio <= bound * (1.0 + RATIO_REL_TOL),
        }
    }
}

/// `f(x)/f(y)`, infinite when only the denominator vanishes.
fn ratio(num: f64, den: f64) -> Option<f64> {
    match (num > 0.0, den > 0.0) {
        (_, true) => Some(num / den),
        (true, false) => Some(f64::INFINITY),
        (false, false) => None,
    }
}

fn better(best: &mut Option<(f64, f64, f64)>, cand: (f64, f64, f64)) {
    if best.is_none_or(|b| cand.0 > b.0) {
        *best = Some(cand);
    }
}

fn window_half_width(params: &PrivacyParams) -> f64 {
    let k = params.tail_periods(WINDOW_TAIL).min(MAX_AUDIT_PERIODS);
    (k + 1) as f64 * params.delta()
}

/// Audits a continuous density: exactly over constant pieces when the
/// density is piecewise constant, on a point grid otherwise.
pub fn audit_ratio_continuous(mech: &dyn ContinuousNoise, x_grid_n: usize, d_grid_n: usize) -> Result<RatioAudit> {
    let w = window_half_width(mech.params());
    match mech.breakpoints(-w, w) {
        Some(points) => Ok(audit_cells(mech, &points)),
        None => audit_ratio_grid(mech, x_grid_n, d_grid_n),
    }
}

/// Exact audit over pieces `[p_j, p_{j+1})`: `P` and `Q` are compatible
/// when some `x ∈ P` and `|d| <= Δ` put `x + d` in `Q`, and the density on
/// each piece is read at its midpoint.
fn audit_cells(mech: &dyn ContinuousNoise, points: &[f64]) -> RatioAudit {
    let params = mech.params();
    let delta = params.delta();
    let reach = delta * (1.0 - TOUCH_REL);
    let cells: Vec<(f64, f64, f64)> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], mech.density(0.5 * (w[0] + w[1]))))
        .collect();
    let (best, pairs) = cells
        .par_iter()
        .map(|&(l1, r1, f1)| {
            let mut best = None;
            // Q = [l2, r2) with l2 - r1 < Δ and l1 - r2 < Δ
            let start = cells.partition_point(|c| l1 - c.1 >= reach);
            let mut pairs = 0usize;
            for &(l2, r2, f2) in cells[start..].iter().take_while(|c| c.0 - r1 < reach) {
                pairs += 1;
                if let Some(r) = ratio(f1, f2) {
                    let x = 0.5 * (l1 + r1);
                    let d = (0.5 * (l2 + r2) - x).clamp(-delta, delta);
                    better(&mut best, (r, x, d));
                }
            }
            (best, pairs)
        })
        .reduce(
            || (None, 0),
            |(mut a, n), (b, m)| {
                if let Some(c) = b {
                    better(&mut a, c);
                }
                (a, n + m)
            },
        );
    RatioAudit::finish(
        params,
        best,
        AuditGrid::ExactCells {
            cells: cells.len(),
            pairs,
        },
    )
}

/// Audits on a uniform `x` grid over the tail window (plus points just
/// either side of any breakpoint) and a uniform `d` grid on `[-Δ, Δ]`.
pub fn audit_ratio_grid(mech: &dyn ContinuousNoise, x_grid_n: usize, d_grid_n: usize) -> Result<RatioAudit> {
    if x_grid_n < 2 || d_grid_n < 2 {
        return Err(invalid("grid", "audit grids need at least 2 points"));
    }
    let params = mech.params();
    let delta = params.delta();
    let w = window_half_width(params);
    let mut xs: Vec<f64> = (0..x_grid_n)
        .map(|i| -w + 2.0 * w * i as f64 / (x_grid_n - 1) as f64)
        .collect();
    if let Some(points) = mech.breakpoints(-w, w) {
        for p in points {
            xs.extend([p - BREAKPOINT_OFFSET, p, p + BREAKPOINT_OFFSET]);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ds: Vec<f64> = (0..d_grid_n)
        .map(|i| -delta + 2.0 * delta * i as f64 / (d_grid_n - 1) as f64)
        .collect();
    let mut audit = audit_ratio_points(mech, &xs, &ds);
    audit.grid = AuditGrid::Points {
        x_points: xs.len(),
        d_points: ds.len(),
    };
    Ok(audit)
}

/// Audits exactly the given `x` and `d` values.
pub fn audit_ratio_points(mech: &dyn ContinuousNoise, xs: &[f64], ds: &[f64]) -> RatioAudit {
    let best = xs
        .par_iter()
        .map(|&x| {
            let fx = mech.density(x);
            let mut best = None;
            for &d in ds {
                if let Some(r) = ratio(fx, mech.density(x + d)) {
                    better(&mut best, (r, x, d));
                }
            }
            best
        })
        .reduce(
            || None,
            |mut a, b| {
                if let Some(c) = b {
                    better(&mut a, c);
                }
                a
            },
        );
    RatioAudit::finish(
        mech.params(),
        best,
        AuditGrid::Points {
            x_points: xs.len(),
            d_points: ds.len(),
        },
    )
}

/// Exact audit of `p(i)/p(i+d)` over `|i| <= span` and `|d| <= Δ`.
pub fn audit_ratio_discrete(mech: &DiscreteStaircase, span: u64) -> Result<RatioAudit> {
    let delta = mech.delta() as i64;
    let shifts: Vec<i64> = (-delta..=delta).collect();
    audit_ratio_discrete_shifts(mech, span, &shifts)
}

/// Like [`audit_ratio_discrete`] for a chosen set of shifts.
pub fn audit_ratio_discrete_shifts(mech: &DiscreteStaircase, span: u64, shifts: &[i64]) -> Result<RatioAudit> {
    if span < mech.delta() {
        return Err(invalid(
            "span",
            format!("must be at least delta = {}, got {span}", mech.delta()),
        ));
    }
    let delta = mech.delta() as i64;
    if let Some(d) = shifts.iter().find(|d| d.abs() > delta) {
        return Err(invalid(
            "shift",
            format!("|d| must not exceed delta = {delta}, got {d}"),
        ));
    }
    let span = i64::try_from(span).map_err(|_| invalid("span", "too large"))?;
    let best = (-span..=span)
        .into_par_iter()
        .map(|i| {
            let pi = mech.pmf(i);
            let mut best = None;
            for &d in shifts {
                if let Some(r) = ratio(pi, mech.pmf(i + d)) {
                    better(&mut best, (r, i as f64, d as f64));
                }
            }
            best
        })
        .reduce(
            || None,
            |mut a, b| {
                if let Some(c) = b {
                    better(&mut a, c);
                }
                a
            },
        );
    Ok(RatioAudit::finish(
        mech.params(),
        best,
        AuditGrid::Discrete {
            span: span as u64,
            d_points: shifts.len(),
        },
    ))
}

/// A density with its positive half-line multiplied by `factor`.
///
/// Deliberately breaks the privacy constraint; used to check that audits
/// catch corrupted input.
pub struct ScaledHalfLine<'a> {
    inner: &'a dyn ContinuousNoise,
    factor: f64,
}

impl<'a> ScaledHalfLine<'a> {
    pub fn new(inner: &'a dyn ContinuousNoise, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid("factor", format!("must be positive and finite, got {factor}")));
        }
        Ok(Self { inner, factor })
    }
}

impl ContinuousNoise for ScaledHalfLine<'_> {
    fn params(&self) -> &PrivacyParams {
        self.inner.params()
    }

    fn label(&self) -> String {
        format!("{}-scaled-half-line", self.inner.label())
    }

    fn density(&self, x: f64) -> f64 {
        let f = self.inner.density(x);
        if x > 0.0 {
            f * self.factor
        } else {
            f
        }
    }

    fn distribution(&self, x: f64) -> f64 {
        let zero = self.inner.distribution(0.0);
        if x <= 0.0 {
            self.inner.distribution(x)
        } else {
            zero + self.factor * (self.inner.distribution(x) - zero)
        }
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Option<Vec<f64>> {
        let mut points = self.inner.breakpoints(lo, hi)?;
        if lo <= 0.0 && hi >= 0.0 {
            points.push(0.0);
            points.sort_by(f64::total_cmp);
            points.dedup();
        }
        Some(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{Laplace, Staircase};

    fn params(eps: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(eps, delta).unwrap()
    }

    #[test]
    fn staircase_exact_audit_is_tight() {
        let m = Staircase::new(params(1.0, 1.0), 0.3).unwrap();
        let a = audit_ratio_continuous(&m, 101, 11).unwrap();
        assert!(matches!(a.grid, AuditGrid::ExactCells { .. }));
        let e = 1f64.exp();
        assert!(
            a.max_ratio >= e * (1.0 - 1e-9) && a.max_ratio <= e * (1.0 + 1e-12),
            "{a:?}"
        );
        assert!(a.passed);
    }

    #[test]
    fn staircase_zero_shift() {
        let m = Staircase::new(params(1.0, 1.0), 0.3).unwrap();
        let xs: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.037).collect();
        let a = audit_ratio_points(&m, &xs, &[0.0]);
        assert_eq!(a.max_ratio, 1.0);
    }

    #[test]
    fn laplace_grid_audit() {
        let m = Laplace::new(params(1.5, 2.0));
        let a = audit_ratio_continuous(&m, 2001, 41).unwrap();
        assert!(matches!(a.grid, AuditGrid::Points { .. }));
        assert!(a.passed);
        assert!((a.max_ratio / 1.5f64.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn staircase_grid_mode_also_passes() {
        let m = Staircase::new(params(2.0, 1.0), 0.25).unwrap();
        let a = audit_ratio_grid(&m, 501, 21).unwrap();
        assert!(a.passed);
        assert!(a.max_ratio >= 2f64.exp() * (1.0 - 1e-9));
    }

    #[test]
    fn corrupted_density_fails() {
        let m = Staircase::new(params(1.0, 1.0), 0.5).unwrap();
        let bad = ScaledHalfLine::new(&m, 3.0).unwrap();
        let a = audit_ratio_continuous(&bad, 101, 11).unwrap();
        assert!(!a.passed);
        assert!(a.max_ratio > 1f64.exp());
    }

    #[test]
    fn discrete_examples() {
        let g = DiscreteStaircase::geometric(params(0.8, 1.0)).unwrap();
        let a = audit_ratio_discrete(&g, 100).unwrap();
        assert!((a.max_ratio - 0.8f64.exp()).abs() < 1e-12);
        assert!(a.passed);
        let m = DiscreteStaircase::new(params(2.0_f64.ln(), 2.0), 1).unwrap();
        let a = audit_ratio_discrete(&m, 100).unwrap();
        assert!((a.max_ratio - 2.0).abs() < 1e-12);
        let a = audit_ratio_discrete_shifts(&m, 100, &[0]).unwrap();
        assert_eq!(a.max_ratio, 1.0);
        assert!(audit_ratio_discrete(&m, 1).is_err());
    }

    #[test]
    fn bad_grids() {
        let m = Laplace::new(params(1.0, 1.0));
        assert!(audit_ratio_grid(&m, 1, 10).is_err());
    }
}
