use std::path::Path;

use super::GrowthBound;
use crate::error::{Error, Result};

/// Cost sampled on `0 = x_0 < x_1 < ... < x_n`, linearly interpolated.
///
/// Beyond `x_n` the cost is unknown; [`TabulatedCost::eval`] returns the
/// envelope `L(x_n)·B^ceil(x - x_n)`, which is only used to bound tails.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCost {
    xs: Vec<f64>,
    ys: Vec<f64>,
    growth: GrowthBound,
    /// `∫_0^{x_j} L` at every sample.
    area: Vec<f64>,
}

fn bad(reason: impl Into<String>) -> Error {
    Error::InvalidCost(reason.into())
}

impl TabulatedCost {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, threshold: f64, ratio: f64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(bad("abscissae and values differ in length"));
        }
        if xs.len() < 2 {
            return Err(bad("at least two samples are required"));
        }
        if xs[0] != 0.0 {
            return Err(bad(format!("first abscissa must be 0, got {}", xs[0])));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(bad("samples must be finite"));
        }
        if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(bad(format!(
                "abscissae must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        if ys[0] < 0.0 {
            return Err(bad("cost values must be non-negative"));
        }
        if let Some(w) = ys.windows(2).find(|w| w[1] < w[0]) {
            return Err(bad(format!("cost must be non-decreasing ({} then {})", w[0], w[1])));
        }
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(bad(format!("threshold T must be positive, got {threshold}")));
        }
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(bad(format!("growth bound B must be finite and >= 1, got {ratio}")));
        }
        let last = *xs.last().unwrap_or(&0.0);
        if threshold > last {
            return Err(bad(format!(
                "threshold T = {threshold} lies beyond the last sample {last}"
            )));
        }
        let mut area = Vec::with_capacity(xs.len());
        area.push(0.0);
        for j in 1..xs.len() {
            area.push(area[j - 1] + 0.5 * (ys[j - 1] + ys[j]) * (xs[j] - xs[j - 1]));
        }
        let table = Self {
            xs,
            ys,
            growth: GrowthBound { threshold, ratio },
            area,
        };
        if table.interpolate(threshold) <= 0.0 {
            return Err(bad("L(T) must be positive"));
        }
        // spot-check L(x+1) <= B L(x) wherever both points are tabulated
        for &x in table.xs.iter().filter(|&&x| x >= threshold && x + 1.0 <= last) {
            let lhs = table.interpolate(x + 1.0);
            let rhs = ratio * table.interpolate(x);
            if lhs > rhs * (1.0 + 1e-12) {
                return Err(bad(format!(
                    "growth bound violated at x = {x}: L(x+1)/L(x) = {} > B = {ratio}",
                    lhs / table.interpolate(x)
                )));
            }
        }
        Ok(table)
    }

    /// Parses the two-column text format.
    ///
    /// A header line starting with `#` declares `T=<threshold>` and
    /// `B=<ratio>`; data lines hold `x, L(x)` separated by a comma or
    /// whitespace. Blank lines and further `#` lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut threshold = None;
        let mut ratio = None;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for tok in header.split(|c: char| c.is_whitespace() || c == ',') {
                    let Some((key, value)) = tok.split_once('=') else {
                        continue;
                    };
                    let parsed = value.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno,
                        reason: format!("bad header value `{tok}`"),
                    });
                    match key.trim().to_ascii_lowercase().as_str() {
                        "t" | "threshold" => threshold = Some(parsed?),
                        "b" | "ratio" => ratio = Some(parsed?),
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: lineno,
                    reason: format!("expected two columns, found {}", cols.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    reason: format!("`{s}` is not a number"),
                })
            };
            xs.push(num(cols[0])?);
            ys.push(num(cols[1])?);
        }
        let threshold = threshold.ok_or_else(|| bad("header must declare T=<threshold>"))?;
        let ratio = ratio.ok_or_else(|| bad("header must declare B=<ratio>"))?;
        Self::new(xs, ys, threshold, ratio)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn growth(&self) -> GrowthBound {
        self.growth
    }

    pub fn max_abscissa(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Value at the last sample.
    pub fn max_value(&self) -> f64 {
        self.ys[self.ys.len() - 1]
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.xs
    }

    /// Sample abscissae strictly inside `(lo, hi)`.
    pub fn knots_between(&self, lo: f64, hi: f64) -> &[f64] {
        let start = self.xs.partition_point(|&x| x <= lo);
        let end = self.xs.partition_point(|&x| x < hi);
        if start >= end {
            &[]
        } else {
            &self.xs[start..end]
        }
    }

    fn interpolate(&self, y: f64) -> f64 {
        let j = self.xs.partition_point(|&x| x <= y);
        if j == 0 {
            return self.ys[0];
        }
        if j >= self.xs.len() {
            return self.max_value();
        }
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (y0, y1) = (self.ys[j - 1], self.ys[j]);
        y0 + (y1 - y0) * (y - x0) / (x1 - x0)
    }

    /// `∫_0^y L` for `0 <= y <= x_n`, exact for the interpolant.
    fn antiderivative(&self, y: f64) -> f64 {
        let j = self.xs.partition_point(|&x| x <= y);
        if j == 0 {
            return 0.0;
        }
        if j >= self.xs.len() {
            return self.area[self.area.len() - 1];
        }
        let x0 = self.xs[j - 1];
        self.area[j - 1] + 0.5 * (self.ys[j - 1] + self.interpolate(y)) * (y - x0)
    }

    /// `∫_lo^hi L` for `0 <= lo <= hi <= x_n`.
    pub(crate) fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }

    pub(crate) fn eval(&self, y: f64) -> f64 {
        let last = self.max_abscissa();
        if y <= last {
            self.interpolate(y)
        } else {
            self.max_value() * self.growth.ratio.powf((y - last).ceil())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_is_exact_for_interpolant() {
        let t = TabulatedCost::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 2.0], 1.0, 1.0).unwrap();
        assert!((t.integral(0.0, 3.0) - 5.0).abs() < 1e-15);
        assert!((t.integral(0.5, 2.0) - (0.75 + 2.0)).abs() < 1e-15);
        assert_eq!(t.integral(1.5, 1.5), 0.0);
    }

    #[test]
    fn parses_and_interpolates() {
        let t = TabulatedCost::parse("# T=1 B=4\n0 0\n1, 1\n2 4\n\n3 9\n").unwrap();
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(3.0), 9.0);
        // envelope beyond the table
        assert_eq!(t.eval(3.5), 36.0);
        assert_eq!(t.knots_between(0.5, 2.5), &[1.0, 2.0]);
        assert_eq!(t.knots_between(1.0, 2.0), &[] as &[f64]);
    }

    #[test]
    fn validation_errors() {
        assert!(TabulatedCost::parse("0 0\n1 1\n").is_err()); // no header
        assert!(TabulatedCost::parse("# T=1 B=2\n0 0\n1 1 1\n").is_err());
        assert!(TabulatedCost::parse("# T=1 B=2\n0 0\nx 1\n").is_err());
        assert!(TabulatedCost::new(vec![0.0, 1.0], vec![1.0, 0.5], 1.0, 2.0).is_err());
        assert!(TabulatedCost::new(vec![0.5, 1.0], vec![0.0, 1.0], 1.0, 2.0).is_err());
        assert!(TabulatedCost::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0], 1.0, 2.0).is_err());
        assert!(TabulatedCost::new(vec![0.0, 1.0], vec![0.0, 1.0], 5.0, 2.0).is_err());
        assert!(TabulatedCost::new(vec![0.0, 1.0], vec![0.0, 0.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn growth_bound_is_spot_checked() {
        // x^2 grows by 4 from 1 to 2, so B = 3 is violated
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        let ys = vec![0.0, 1.0, 4.0, 9.0];
        assert!(TabulatedCost::new(xs.clone(), ys.clone(), 1.0, 3.0).is_err());
        assert!(TabulatedCost::new(xs, ys, 1.0, 4.0).is_ok());
    }
}
