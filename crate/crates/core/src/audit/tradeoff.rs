use std::io::{self, Write};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mechanisms::ContinuousNoise;
use crate::params::PrivacyParams;

/// Tail mass outside the window where likelihood ratios are resolved.
const WINDOW_TAIL: f64 = 1e-15;

/// Cap on periods per side of the window.
const MAX_WINDOW_PERIODS: usize = 100_000;

/// Relative tolerance for merging cells with equal likelihood ratio.
const TIE_REL: f64 = 1e-12;

/// CSV header of [`TradeoffCurve::write_csv`].
pub const TRADEOFF_CSV_HEADER: &str = "p_fa,p_md,mechanism,epsilon,shift";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub p_fa: f64,
    pub p_md: f64,
}

/// Achievable `(P_FA, P_MD)` pairs for testing `X ~ f` against
/// `X ~ f(· - shift)`, ordered by increasing `P_FA`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub mechanism: String,
    pub epsilon: f64,
    pub shift: f64,
    pub points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    /// Smallest slack in `e^ε P_MD + P_FA >= 1` and `P_MD + e^ε P_FA >= 1`.
    pub fn feasibility_margin(&self) -> f64 {
        let e = self.epsilon.exp();
        self.points
            .iter()
            .map(|p| (e * p.p_md + p.p_fa - 1.0).min(p.p_md + e * p.p_fa - 1.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Both DP bounds hold at every point up to `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.feasibility_margin() >= -tol
    }

    pub fn is_non_increasing(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].p_fa >= w[0].p_fa && w[1].p_md <= w[0].p_md)
    }

    /// `P_MD` at `p_fa` by linear interpolation between vertices, i.e. the
    /// randomized test mixing the two neighbouring thresholds.
    pub fn p_md_at(&self, p_fa: f64) -> f64 {
        let pts = &self.points;
        let j = pts.partition_point(|p| p.p_fa < p_fa);
        if j == 0 {
            return pts[0].p_md;
        }
        if j >= pts.len() {
            return pts[pts.len() - 1].p_md;
        }
        let (a, b) = (pts[j - 1], pts[j]);
        if b.p_fa == a.p_fa {
            return b.p_md;
        }
        a.p_md + (b.p_md - a.p_md) * (p_fa - a.p_fa) / (b.p_fa - a.p_fa)
    }

    /// Writes one CSV row per point, numbers with 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: bool) -> io::Result<()> {
        if header {
            writeln!(out, "{TRADEOFF_CSV_HEADER}")?;
        }
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::format_g12(p.p_fa),
                crate::format_g12(p.p_md),
                self.mechanism,
                crate::format_g12(self.epsilon),
                crate::format_g12(self.shift)
            )?;
        }
        Ok(())
    }
}

/// Optimal `P_MD` for the Laplace pair at shift `Δ`.
pub fn laplace_tradeoff_at(params: &PrivacyParams, p_fa: f64) -> f64 {
    let b = params.b();
    let p = p_fa.clamp(0.0, 1.0);
    if p < b / 2.0 {
        1.0 - params.ratio_bound() * p
    } else if p < 0.5 {
        b / (4.0 * p)
    } else {
        b * (1.0 - p)
    }
}

/// The closed-form Laplace curve on `n_points` uniform `P_FA` values plus
/// the two piece boundaries.
pub fn laplace_tradeoff(params: &PrivacyParams, n_points: usize) -> Result<TradeoffCurve> {
    if n_points < 2 {
        return Err(invalid("n_points", "need at least 2 points"));
    }
    let mut xs: Vec<f64> = (0..n_points).map(|i| i as f64 / (n_points - 1) as f64).collect();
    xs.extend([params.b() / 2.0, 0.5]);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(TradeoffCurve {
        mechanism: "laplace".to_string(),
        epsilon: params.epsilon(),
        shift: params.delta(),
        points: xs
            .into_iter()
            .map(|p_fa| TradeoffPoint {
                p_fa,
                p_md: laplace_tradeoff_at(params, p_fa),
            })
            .collect(),
    })
}

/// Likelihood-ratio sweep between `f` (null) and `f(· - shift)`.
///
/// The line is cut at the density's breakpoints and their shifts, at
/// `n_thresholds` uniform points between `0` and `shift`, and at the edges
/// of a tail window. Cells are admitted into the rejection region in
/// decreasing order of `P_1(cell)/P_0(cell)`; each prefix is a
/// deterministic test and the segments between them are randomized tests.
pub fn numeric_tradeoff(mech: &dyn ContinuousNoise, shift: f64, n_thresholds: usize) -> Result<TradeoffCurve> {
    let params = mech.params();
    let delta = params.delta();
    if !shift.is_finite() || shift.abs() > delta {
        return Err(invalid(
            "shift",
            format!("|shift| must not exceed delta = {delta}, got {shift}"),
        ));
    }
    if n_thresholds < 1 {
        return Err(invalid("n_thresholds", "need at least 1"));
    }
    let (lo, hi) = (shift.min(0.0), shift.max(0.0));
    let k = params.tail_periods(WINDOW_TAIL).min(MAX_WINDOW_PERIODS);
    let reach = (k + 1) as f64 * delta;
    let (w_lo, w_hi) = (lo - reach, hi + reach);

    let mut cuts = vec![w_lo, w_hi];
    cuts.extend((0..=n_thresholds).map(|i| lo + (hi - lo) * i as f64 / n_thresholds as f64));
    if let Some(points) = mech.breakpoints(w_lo - delta, w_hi + delta) {
        for p in points {
            cuts.extend([p, p + shift]);
        }
    }
    cuts.retain(|&c| c >= w_lo && c <= w_hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // (P_0, P_1) per cell, tails included
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(cuts.len() + 1);
    cells.push((mech.distribution(w_lo), mech.distribution(w_lo - shift)));
    for w in cuts.windows(2) {
        cells.push((mech.mass(w[0], w[1]), mech.mass(w[0] - shift, w[1] - shift)));
    }
    cells.push((1.0 - mech.distribution(w_hi), 1.0 - mech.distribution(w_hi - shift)));
    cells.retain(|&(m0, m1)| m0 > 0.0 || m1 > 0.0);
    cells.sort_by(|a, b| (b.1 * a.0).total_cmp(&(a.1 * b.0)));

    // merge ties
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(cells.len());
    for (m0, m1) in cells {
        if let Some(last) = merged.last_mut() {
            if ((m1 * last.0) - (last.1 * m0)).abs() <= TIE_REL * (m1 * last.0).abs().max((last.1 * m0).abs()) {
                last.0 += m0;
                last.1 += m1;
                continue;
            }
        }
        merged.push((m0, m1));
    }

    // P_MD as a suffix sum keeps small values accurate
    let mut suffix = vec![0.0; merged.len() + 1];
    for j in (0..merged.len()).rev() {
        suffix[j] = suffix[j + 1] + merged[j].1;
    }
    let mut points = Vec::with_capacity(merged.len() + 1);
    let mut p_fa = 0.0;
    points.push(TradeoffPoint {
        p_fa: 0.0,
        p_md: suffix[0].min(1.0),
    });
    for (j, &(m0, _)) in merged.iter().enumerate() {
        p_fa += m0;
        points.push(TradeoffPoint {
            p_fa: p_fa.min(1.0),
            p_md: suffix[j + 1].min(1.0),
        });
    }
    Ok(TradeoffCurve {
        mechanism: mech.label(),
        epsilon: params.epsilon(),
        shift,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{Laplace, Staircase};
    use crate::optimizer::gamma_opt_abs;

    fn params(eps: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(eps, delta).unwrap()
    }

    #[test]
    fn closed_form_continuity() {
        let p = params(1.3, 1.0);
        let b = p.b();
        assert!((laplace_tradeoff_at(&p, 0.5) - b / 2.0).abs() < 1e-15);
        assert!((b / (4.0 * 0.5) - b * 0.5).abs() < 1e-15);
        assert!((laplace_tradeoff_at(&p, b / 2.0) - 0.5).abs() < 1e-15);
        assert!((1.0 - p.ratio_bound() * b / 2.0 - 0.5).abs() < 1e-15);
        // e^-1 / 1.2
        let p = params(1.0, 1.0);
        assert!((laplace_tradeoff_at(&p, 0.3) - 0.306_566_200_976_201_9).abs() < 1e-15);
    }

    #[test]
    fn zero_shift_is_diagonal() {
        let m = Staircase::new(params(1.0, 1.0), 0.4).unwrap();
        let c = numeric_tradeoff(&m, 0.0, 10).unwrap();
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((c.p_md_at(x) - (1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn rounded_suffix_stays_monotone() {
        // the summed masses round slightly above one at this optimum
        let p = params(1.0, 1.0);
        let g = gamma_opt_abs(&p).unwrap().gamma().unwrap();
        let c = numeric_tradeoff(&Staircase::new(p, g).unwrap(), 1.0, 200).unwrap();
        assert!(c.is_non_increasing());
        assert!(c.points.iter().all(|q| q.p_md <= 1.0 && q.p_fa <= 1.0));
    }

    #[test]
    fn laplace_numeric_matches_closed_form() {
        let p = params(1.0, 1.0);
        let m = Laplace::new(p);
        let c = numeric_tradeoff(&m, 1.0, 2048).unwrap();
        let worst = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                (c.p_md_at(x) - laplace_tradeoff_at(&p, x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        assert!(c.is_non_increasing());
        assert!(c.is_feasible(1e-10));
    }

    #[test]
    fn staircase_curve_is_feasible() {
        let p = params(2.0, 1.0);
        let g = gamma_opt_abs(&p).unwrap().gamma().unwrap();
        let m = Staircase::new(p, g).unwrap();
        for shift in [1.0, -1.0, 0.37] {
            let c = numeric_tradeoff(&m, shift, 64).unwrap();
            assert!(c.is_feasible(1e-10), "{shift}: {}", c.feasibility_margin());
            assert!(c.is_non_increasing());
            assert_eq!(c.points[0].p_fa, 0.0);
            assert!(c.points.last().unwrap().p_md.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_large_shift() {
        let m = Laplace::new(params(1.0, 1.0));
        assert!(numeric_tradeoff(&m, 1.5, 10).is_err());
    }

    #[test]
    fn csv_layout() {
        let c = laplace_tradeoff(&params(1.0, 1.0), 3).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRADEOFF_CSV_HEADER));
        assert_eq!(lines.next(), Some("0,1,laplace,1,1"));
    }
}
