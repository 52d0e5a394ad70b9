use crate::error::{invalid, Result};

/// Outcome of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenSearch {
    pub x: f64,
    pub value: f64,
    pub bracket_width: f64,
    pub evaluations: usize,
    /// Largest minus smallest objective value seen.
    pub spread: f64,
}

const MAX_ITERATIONS: usize = 400;

/// Minimizes a unimodal `f` on `[lo, hi]` until the bracket is narrower
/// than `tol`. The endpoints are also evaluated, so monotone objectives
/// return the better endpoint.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<GoldenSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid("bracket", format!("need finite lo < hi, got [{lo}, {hi}]")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evaluations = 2;
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    let (mut min, mut max) = (fc.min(fd), fc.max(fd));
    let mut seen = |x: f64, v: f64, best: &mut (f64, f64)| {
        min = min.min(v);
        max = max.max(v);
        if v < best.1 {
            *best = (x, v);
        }
    };
    for _ in 0..MAX_ITERATIONS {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
            seen(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
            seen(d, fd, &mut best);
        }
        evaluations += 1;
    }
    for x in [lo, hi] {
        let v = f(x)?;
        evaluations += 1;
        seen(x, v, &mut best);
    }
    Ok(GoldenSearch {
        x: best.0,
        value: best.1,
        bracket_width: b - a,
        evaluations,
        spread: max - min,
    })
}
