//! Cost functions and expected-cost evaluation.

mod continuous;
mod discrete;
pub mod quadrature;
mod series;
mod tabulated;

pub use continuous::{
    laplace_cost, laplace_cost_quadrature, staircase_cost, staircase_cost_abs, staircase_cost_excess,
    staircase_cost_moment, staircase_cost_quadrature, staircase_cost_square, QUADRATURE_REL_TOL,
};
pub use discrete::{discrete_cost, discrete_weights, DiscreteWeights};
pub use series::{binomial_row, moment_series, MomentSeries, MAX_BINOMIAL_N};
pub use tabulated::TabulatedCost;

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};

/// Largest supported moment order (`n = m + 1` binomials must stay exact).
pub const MAX_MOMENT: u32 = (MAX_BINOMIAL_N - 1) as u32;

/// Symmetric, non-decreasing loss on the noise magnitude.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFunction {
    Abs,
    Square,
    /// `|x|^m`, `m >= 1`.
    Moment(u32),
    Tabulated(TabulatedCost),
}

/// Threshold `T` and ratio bound `B` with `L(x+1) <= B·L(x)` for `x >= T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthBound {
    pub threshold: f64,
    pub ratio: f64,
}

impl CostFunction {
    pub fn moment(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_MOMENT {
            return Err(invalid(
                "m",
                format!("moment order must lie in [1, {MAX_MOMENT}], got {m}"),
            ));
        }
        Ok(Self::Moment(m))
    }

    /// Parses `abs`, `square`, `moment:<m>` or `table:<path>`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "abs" => return Ok(Self::Abs),
            "square" => return Ok(Self::Square),
            _ => {}
        }
        if let Some(m) = spec.strip_prefix("moment:") {
            let m: u32 = m
                .trim()
                .parse()
                .map_err(|_| invalid("cost", format!("bad moment order in `{spec}`")))?;
            return Self::moment(m);
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return Ok(Self::Tabulated(TabulatedCost::from_path(path.trim())?));
        }
        Err(invalid(
            "cost",
            format!("expected abs, square, moment:<m> or table:<path>, got `{spec}`"),
        ))
    }

    /// Moment order for `|x|^m` costs.
    pub fn power(&self) -> Option<u32> {
        match self {
            Self::Abs => Some(1),
            Self::Square => Some(2),
            Self::Moment(m) => Some(*m),
            Self::Tabulated(_) => None,
        }
    }

    /// `L(x)`. Tabulated costs return their geometric upper envelope
    /// beyond the last sample.
    pub fn eval(&self, x: f64) -> f64 {
        let y = x.abs();
        match self {
            Self::Abs => y,
            Self::Square => y * y,
            Self::Moment(m) => y.powi(*m as i32),
            Self::Tabulated(t) => t.eval(y),
        }
    }

    pub fn growth(&self) -> GrowthBound {
        match self {
            Self::Tabulated(t) => t.growth(),
            other => GrowthBound {
                threshold: 1.0,
                ratio: 2f64.powi(other.power().unwrap_or(1) as i32),
            },
        }
    }

    /// Last abscissa where `L` is known exactly.
    pub fn support_limit(&self) -> Option<f64> {
        match self {
            Self::Tabulated(t) => Some(t.max_abscissa()),
            _ => None,
        }
    }

    /// Upper bound on `L(x + step) / L(x)` over `x >= from`, when known.
    pub(crate) fn step_ratio(&self, from: f64, step: f64) -> Option<f64> {
        match self {
            Self::Tabulated(t) => {
                if from >= t.max_abscissa() {
                    Some(t.growth().ratio.powf(step.ceil()))
                } else {
                    None
                }
            }
            other => {
                if from <= 0.0 {
                    return None;
                }
                let m = other.power().unwrap_or(1) as i32;
                Some(((from + step) / from).powi(m))
            }
        }
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Abs => write!(f, "abs"),
            Self::Square => write!(f, "square"),
            Self::Moment(m) => write!(f, "moment:{m}"),
            Self::Tabulated(_) => write!(f, "table"),
        }
    }
}

/// How an expected cost was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMethod {
    ClosedForm,
    Series,
    Quadrature,
}

/// Expected cost `V(p) = ∫ L dp` with a truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedCost {
    pub value: f64,
    pub method: CostMethod,
    pub error_bound: f64,
}

impl ExpectedCost {
    pub fn exact(value: f64, method: CostMethod) -> Self {
        Self {
            value,
            method,
            error_bound: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(CostFunction::parse_spec("abs").unwrap(), CostFunction::Abs);
        assert_eq!(CostFunction::parse_spec("square").unwrap(), CostFunction::Square);
        assert_eq!(CostFunction::parse_spec("moment:3").unwrap(), CostFunction::Moment(3));
        assert!(CostFunction::parse_spec("moment:0").is_err());
        assert!(CostFunction::parse_spec("moment:64").is_err());
        assert!(CostFunction::parse_spec("cubic").is_err());
        assert!(CostFunction::parse_spec("table:/nonexistent/file").is_err());
    }

    #[test]
    fn symmetric_and_monotone() {
        for c in [CostFunction::Abs, CostFunction::Square, CostFunction::Moment(5)] {
            let mut prev = c.eval(0.0);
            for i in 1..200 {
                let x = i as f64 * 0.07;
                assert_eq!(c.eval(x), c.eval(-x));
                assert!(c.eval(x) >= prev);
                prev = c.eval(x);
            }
        }
    }

    #[test]
    fn moment_growth_bound_holds() {
        let c = CostFunction::Moment(3);
        let g = c.growth();
        assert_eq!(g.threshold, 1.0);
        assert_eq!(g.ratio, 8.0);
        for i in 0..100 {
            let x = 1.0 + i as f64 * 0.37;
            assert!(c.eval(x + 1.0) / c.eval(x) <= g.ratio);
        }
    }
}
