//! Fixed-order Gauss–Legendre rule.

use std::sync::OnceLock;

/// Nodes per integration piece.
pub const NODES: usize = 32;

struct Rule {
    nodes: [f64; NODES],
    weights: [f64; NODES],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = [0.0; NODES];
        let mut weights = [0.0; NODES];
        let n = NODES as f64;
        for i in 0..NODES.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(NODES, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(NODES, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[NODES - 1 - i] = x;
            weights[i] = w;
            weights[NODES - 1 - i] = w;
        }
        Rule { nodes, weights }
    })
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫_lo^hi f(x) dx` with one application of the rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let r = rule();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * r
        .nodes
        .iter()
        .zip(r.weights.iter())
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
}
