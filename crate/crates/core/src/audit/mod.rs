//! Privacy audits: density-ratio checks, hypothesis-testing tradeoff
//! curves and goodness-of-fit tests for the samplers.

mod gof;
mod ratio;
mod tradeoff;

pub use gof::{
    chi_square, kolmogorov_p_value, ks_statistic, ks_test, sampler_gof_against, sampler_gof_continuous,
    sampler_gof_discrete, GofReport, GofTest, GOF_ALPHA, MIN_GOF_SAMPLES,
};
pub use ratio::{
    audit_ratio_continuous, audit_ratio_discrete, audit_ratio_discrete_shifts, audit_ratio_grid, audit_ratio_points,
    AuditGrid, RatioAudit, ScaledHalfLine, RATIO_REL_TOL,
};
pub use tradeoff::{
    laplace_tradeoff, laplace_tradeoff_at, numeric_tradeoff, TradeoffCurve, TradeoffPoint, TRADEOFF_CSV_HEADER,
};

use serde::Serialize;

use crate::params::PrivacyParams;

/// Tolerance on the linear feasibility bounds of tradeoff curves.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// One named pass/fail check with the value it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Collected checks for one mechanism.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub mechanism: String,
    pub epsilon: f64,
    pub delta: f64,
    pub checks: Vec<AuditCheck>,
    pub passed: bool,
}

impl AuditReport {
    pub fn new(mechanism: impl Into<String>, params: &PrivacyParams) -> Self {
        Self {
            mechanism: mechanism.into(),
            epsilon: params.epsilon(),
            delta: params.delta(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push(&mut self, check: AuditCheck) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn add_ratio(&mut self, audit: &RatioAudit) {
        self.push(AuditCheck {
            name: "density-ratio".to_string(),
            passed: audit.passed,
            value: audit.max_ratio,
            threshold: audit.bound * (1.0 + RATIO_REL_TOL),
            detail: match audit.grid {
                AuditGrid::ExactCells { cells, pairs } => format!("exact over {cells} cells and {pairs} pairs"),
                AuditGrid::Points { x_points, d_points } => format!("grid {x_points} x {d_points}"),
                AuditGrid::Discrete { span, d_points } => format!("|i| <= {span} with {d_points} shifts"),
            },
        });
    }

    pub fn add_tradeoff(&mut self, curve: &TradeoffCurve) {
        let margin = curve.feasibility_margin();
        self.push(AuditCheck {
            name: "tradeoff-feasibility".to_string(),
            passed: margin >= -FEASIBILITY_TOL && curve.is_non_increasing(),
            value: margin,
            threshold: -FEASIBILITY_TOL,
            detail: format!("{} points at shift {}", curve.points.len(), curve.shift),
        });
    }

    pub fn add_gof(&mut self, report: &GofReport) {
        self.push(AuditCheck {
            name: match report.test {
                GofTest::KolmogorovSmirnov => "sampler-ks".to_string(),
                GofTest::ChiSquare => "sampler-chi-square".to_string(),
            },
            passed: report.passed,
            value: report.p_value,
            threshold: GOF_ALPHA,
            detail: format!(
                "statistic {} over n = {} (seed {})",
                report.statistic, report.n, report.seed
            ),
        });
    }
}
