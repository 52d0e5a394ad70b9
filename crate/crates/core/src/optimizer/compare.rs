use rayon::prelude::*;
use serde::Serialize;

use super::continuous::gamma_opt;
use crate::costs::{laplace_cost, laplace_cost_quadrature, CostFunction};
use crate::error::Result;
use crate::params::PrivacyParams;

/// Laplace versus optimal staircase at one privacy level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub epsilon: f64,
    pub v_lap: f64,
    pub v_opt: f64,
    /// `v_lap / v_opt`.
    pub gain: f64,
    /// `v_lap - v_opt`.
    pub gap: f64,
}

/// Evaluates both mechanisms at every `ε` in `eps_grid`, keeping the
/// sensitivity of `params`. Rows come back in grid order.
pub fn compare_mechanisms(params: &PrivacyParams, cost: &CostFunction, eps_grid: &[f64]) -> Result<Vec<ComparisonRow>> {
    eps_grid
        .par_iter()
        .map(|&epsilon| {
            let p = PrivacyParams::new(epsilon, params.delta())?;
            let v_lap = match cost.power() {
                Some(_) => laplace_cost(&p, cost)?,
                None => laplace_cost_quadrature(&p, cost)?,
            }
            .value;
            let v_opt = gamma_opt(&p, cost)?.cost.value;
            Ok(ComparisonRow {
                epsilon,
                v_lap,
                v_opt,
                gain: v_lap / v_opt,
                gap: v_lap - v_opt,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gains_at_ten() {
        let p = PrivacyParams::new(1.0, 1.0).unwrap();
        let abs = compare_mechanisms(&p, &CostFunction::Abs, &[10.0]).unwrap()[0];
        assert!((abs.gain - 14.840_642_115_557_752).abs() < 1e-9);
        let sq = compare_mechanisms(&p, &CostFunction::Square, &[10.0]).unwrap()[0];
        assert!((sq.gain - 23.606_893_004_189_11).abs() < 1e-8);
    }

    #[test]
    fn high_privacy_gaps() {
        let p = PrivacyParams::new(1.0, 1.0).unwrap();
        let abs = compare_mechanisms(&p, &CostFunction::Abs, &[0.01]).unwrap()[0];
        assert!((abs.gap - 4.166_654_513_920_9e-4).abs() < 1e-12);
        let sq = compare_mechanisms(&p, &CostFunction::Square, &[0.01]).unwrap()[0];
        assert!((sq.gap - 0.083_333_194_443_893_3).abs() < 1e-8);
    }

    #[test]
    fn rows_keep_grid_order_and_gain_exceeds_one() {
        let p = PrivacyParams::new(1.0, 2.0).unwrap();
        let grid: Vec<f64> = (1..=20).map(f64::from).collect();
        for cost in [CostFunction::Abs, CostFunction::Square, CostFunction::Moment(3)] {
            let rows = compare_mechanisms(&p, &cost, &grid).unwrap();
            assert_eq!(rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(), grid);
            assert!(rows.iter().all(|r| r.gain >= 1.0));
        }
    }
}
