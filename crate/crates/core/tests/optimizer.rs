use staircase::costs::{
    laplace_cost, staircase_cost, staircase_cost_excess, staircase_cost_quadrature, CostFunction, TabulatedCost,
};
use staircase::mechanisms::DiscreteStaircase;
use staircase::optimizer::{
    discrete_r_opt, gamma_opt, gamma_opt_generic, gamma_opt_moment, gamma_opt_square, golden_section,
    OptimizationMethod,
};
use staircase::PrivacyParams;

const EPS_GRID: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];

fn params(eps: f64, delta: f64) -> PrivacyParams {
    PrivacyParams::new(eps, delta).unwrap()
}

#[test]
fn closed_forms_agree_with_golden_section() {
    for &eps in &EPS_GRID {
        let p = params(eps, 1.0);
        for cost in [CostFunction::Abs, CostFunction::Square] {
            let g = gamma_opt(&p, &cost).unwrap().gamma().unwrap();
            let oracle = golden_section(|x| staircase_cost_excess(&p, x, &cost), 0.0, 1.0, 1e-10).unwrap();
            assert!((oracle.x - g).abs() < 1e-8, "{cost} eps={eps}: {g} vs {}", oracle.x);
        }
    }
}

#[test]
fn optimum_dominates_grid_and_laplace() {
    for &eps in &EPS_GRID {
        for delta in [0.5, 1.0, 3.0] {
            let p = params(eps, delta);
            for cost in [CostFunction::Abs, CostFunction::Square, CostFunction::Moment(3)] {
                let best = gamma_opt(&p, &cost).unwrap();
                let v = best.cost.value;
                for i in 0..=1000 {
                    let other = staircase_cost(&p, i as f64 / 1000.0, &cost).unwrap().value;
                    assert!(v <= other * (1.0 + 1e-12), "{cost} eps={eps} i={i}");
                }
                assert!(v <= laplace_cost(&p, &cost).unwrap().value);
                // local-minimum certificate
                let g = best.gamma().unwrap();
                for h in [-1e-4, 1e-4] {
                    let x = (g + h).clamp(0.0, 1.0);
                    assert!(v <= staircase_cost(&p, x, &cost).unwrap().value * (1.0 + 1e-14));
                }
                // reported cost matches the cost module
                let direct = staircase_cost(&p, g, &cost).unwrap().value;
                assert!((direct - v).abs() <= 1e-10 * v);
            }
        }
    }
}

#[test]
fn moment_asymptotics() {
    for m in 1..=4 {
        let g = gamma_opt_moment(&params(1e-4, 1.0), m).unwrap().gamma().unwrap();
        assert!(g > 0.49 && g <= 0.5, "m={m}: {g}");
        let g = gamma_opt_moment(&params(50.0, 1.0), m).unwrap().gamma().unwrap();
        assert!(g < 1e-3, "m={m}: {g}");
    }
    let g = gamma_opt_square(&params(50.0, 1.0)).unwrap().gamma().unwrap();
    assert!(g < 1e-3);
}

#[test]
fn moment_paths_match_golden_section() {
    for &eps in &[0.3, 1.0, 4.0] {
        for m in 1..=6 {
            let r = gamma_opt_moment(&params(eps, 1.0), m).unwrap();
            assert_eq!(r.method, OptimizationMethod::PolynomialRoot);
            assert!(r.diagnostics.golden_deviation.unwrap() < 1e-6, "m={m} eps={eps}");
            assert!(r.diagnostics.residual.unwrap() < 1e-12);
        }
    }
}

/// Brute force with enough support that the omitted tail is below 1e-12
/// relative, so the comparison is against the true expectation.
#[test]
fn discrete_enumeration_matches_long_brute_force() {
    for delta in 1..=6u64 {
        for eps in [0.1, 1.0, 3.0] {
            for cost in [CostFunction::Abs, CostFunction::Square] {
                let p = params(eps, delta as f64);
                let reach = ((40.0 / eps) * delta as f64) as i64;
                let brute: Vec<f64> = (1..=delta)
                    .map(|r| {
                        let m = DiscreteStaircase::new(p, r).unwrap();
                        (-reach..=reach).map(|i| cost.eval(i as f64) * m.pmf(i)).sum()
                    })
                    .collect();
                let r_brute = (0..brute.len()).fold(0, |b, j| if brute[j] < brute[b] { j } else { b }) + 1;
                let opt = discrete_r_opt(&p, &cost).unwrap();
                assert_eq!(opt.step_index(), Some(r_brute as u64), "Δ={delta} ε={eps} {cost}");
                let v = brute[r_brute - 1];
                assert!(
                    (opt.cost.value - v).abs() <= 1e-9 * v.max(1.0),
                    "Δ={delta} ε={eps} {cost}"
                );
            }
        }
    }
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for &eps in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let p = params(eps, 1.0);
        for gamma in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for m in 1..=6 {
                let cost = CostFunction::Moment(m);
                let closed = staircase_cost(&p, gamma, &cost).unwrap().value;
                let quad = staircase_cost_quadrature(&p, gamma, &cost).unwrap().value;
                assert!((closed - quad).abs() <= 1e-6 * closed, "eps={eps} γ={gamma} m={m}");
            }
        }
    }
}

fn table(f: impl Fn(f64) -> f64, step: f64, last: f64, threshold: f64, ratio: f64) -> CostFunction {
    let n = (last / step).round() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let ys = xs.iter().map(|&x| f(x)).collect();
    CostFunction::Tabulated(TabulatedCost::new(xs, ys, threshold, ratio).unwrap())
}

#[test]
fn generic_path_matches_closed_forms() {
    let p = params(2.0 * 2.0_f64.ln(), 1.0);
    let t = table(|x| x, 0.25, 60.0, 1.0, 2.0);
    let r = gamma_opt_generic(&p, &t).unwrap();
    let closed = gamma_opt(&p, &CostFunction::Abs).unwrap().gamma().unwrap();
    assert!((r.gamma().unwrap() - closed).abs() < 1e-6);

    let p = params(2.0_f64.ln(), 1.0);
    let t = table(|x| x * x, 1.0 / 1024.0, 80.0, 40.0, 1.1);
    let r = gamma_opt_generic(&p, &t).unwrap();
    let closed = gamma_opt(&p, &CostFunction::Square).unwrap().gamma().unwrap();
    assert!(
        (r.gamma().unwrap() - closed).abs() < 1e-6,
        "{} vs {closed}",
        r.gamma().unwrap()
    );
    assert!(r.diagnostics.unimodality_assumed);
}
