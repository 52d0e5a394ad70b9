//! Optimal staircase parameters and mechanism comparison.

mod compare;
mod continuous;
mod discrete;
mod golden;

pub use compare::{compare_mechanisms, ComparisonRow};
pub use continuous::{
    gamma_heuristic, gamma_opt, gamma_opt_abs, gamma_opt_generic, gamma_opt_moment, gamma_opt_square,
    heuristic_small_noise_probability, moment_stationarity, square_cubic_residual,
};
pub use discrete::{discrete_cost_profile, discrete_r_opt};
pub use golden::{golden_section, GoldenSearch};

use serde::Serialize;

use crate::costs::ExpectedCost;

/// Bracket width used by the golden-section cross-checks.
pub const CROSS_CHECK_TOL: f64 = 1e-10;

/// The optimized parameter: `γ` for continuous mechanisms, `r` for discrete.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalParameter {
    Gamma(f64),
    StepIndex(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizationMethod {
    ClosedForm,
    PolynomialRoot,
    GoldenSection,
    Enumeration,
    Heuristic,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Stationarity residual at the returned parameter.
    pub residual: Option<f64>,
    /// Final bracket width of the search that produced the parameter.
    pub bracket_width: Option<f64>,
    /// `|γ - γ_golden|` against an independent golden-section search.
    pub golden_deviation: Option<f64>,
    /// The cost did not vary measurably with the parameter.
    pub flat: bool,
    /// Golden-section relied on an unproven unimodality assumption.
    pub unimodality_assumed: bool,
    /// The primary method failed and golden-section was used instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub parameter: OptimalParameter,
    pub cost: ExpectedCost,
    pub method: OptimizationMethod,
    pub diagnostics: Diagnostics,
}

impl OptimizationResult {
    pub fn gamma(&self) -> Option<f64> {
        match self.parameter {
            OptimalParameter::Gamma(g) => Some(g),
            OptimalParameter::StepIndex(_) => None,
        }
    }

    pub fn step_index(&self) -> Option<u64> {
        match self.parameter {
            OptimalParameter::StepIndex(r) => Some(r),
            OptimalParameter::Gamma(_) => None,
        }
    }
}
