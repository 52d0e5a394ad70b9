use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::mechanisms::{ContinuousNoise, DiscreteStaircase, NoiseSampler};
use crate::rng::SeedStreams;

/// Significance level of the sampler tests.
pub const GOF_ALPHA: f64 = 1e-3;

/// Smallest sample size accepted by the sampler tests.
pub const MIN_GOF_SAMPLES: usize = 10_000;

/// Minimum expected count per chi-square bin.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GofTest {
    KolmogorovSmirnov,
    ChiSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofReport {
    pub test: GofTest,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub seed: u64,
    /// Degrees of freedom for the chi-square test.
    pub dof: Option<usize>,
    pub passed: bool,
}

/// `sup |F_n - F|` for sorted samples.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value with Stephens' small-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 * sum.abs() {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, seed: u64) -> GofReport {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = ks_statistic(&sorted, cdf);
    let p = kolmogorov_p_value(d, sorted.len());
    GofReport {
        test: GofTest::KolmogorovSmirnov,
        statistic: d,
        p_value: p,
        n: sorted.len(),
        seed,
        dof: None,
        passed: p > GOF_ALPHA,
    }
}

/// Pearson chi-square statistic, degrees of freedom and p-value.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<(f64, usize, f64)> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(invalid("bins", "need at least two bins with matching lengths"));
    }
    if expected.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(invalid("expected", "expected counts must be positive"));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| invalid("dof", e.to_string()))?;
    Ok((stat, dof, dist.sf(stat)))
}

/// Draws `n` values from `sampler` and tests them against `reference`.
pub fn sampler_gof_against(
    sampler: &dyn NoiseSampler,
    reference: &dyn ContinuousNoise,
    n: usize,
    seed: u64,
) -> Result<GofReport> {
    if n < MIN_GOF_SAMPLES {
        return Err(invalid(
            "n",
            format!("goodness of fit needs n >= {MIN_GOF_SAMPLES}, got {n}"),
        ));
    }
    let samples = SeedStreams::new(seed).draw(n, |rng| sampler.sample_value(rng));
    Ok(ks_test(&samples, |x| reference.distribution(x), seed))
}

/// KS test of a continuous sampler against its own analytic CDF.
pub fn sampler_gof_continuous(mech: &dyn NoiseSampler, n: usize, seed: u64) -> Result<GofReport> {
    sampler_gof_against(mech, mech, n, seed)
}

/// Chi-square test of the discrete sampler over integers with expected
/// count at least 5, tails pooled into two end bins.
pub fn sampler_gof_discrete(mech: &DiscreteStaircase, n: usize, seed: u64) -> Result<GofReport> {
    if n < MIN_GOF_SAMPLES {
        return Err(invalid(
            "n",
            format!("goodness of fit needs n >= {MIN_GOF_SAMPLES}, got {n}"),
        ));
    }
    let nf = n as f64;
    // symmetric core [-m, m] of individually well-populated integers
    let mut m: i64 = 0;
    while nf * mech.pmf(m + 1) >= MIN_EXPECTED {
        m += 1;
    }
    // the pooled tails then get at least one core integer's worth of mass
    if nf * mech.cdf(-m - 1) < MIN_EXPECTED && m > 0 {
        m -= 1;
    }
    let (lo, hi) = (-m, m);

    let samples = SeedStreams::new(seed).draw(n, |rng| mech.sample(rng).value);
    let width = (hi - lo + 1) as usize;
    let mut observed = vec![0u64; width + 2];
    for &x in &samples {
        let slot = if x < lo {
            0
        } else if x > hi {
            width + 1
        } else {
            (x - lo) as usize + 1
        };
        observed[slot] += 1;
    }
    let mut expected = Vec::with_capacity(width + 2);
    expected.push(nf * mech.cdf(lo - 1));
    expected.extend((lo..=hi).map(|i| nf * mech.pmf(i)));
    expected.push(nf * (1.0 - mech.cdf(hi)));
    let (stat, dof, p) = chi_square(&observed, &expected)?;
    Ok(GofReport {
        test: GofTest::ChiSquare,
        statistic: stat,
        p_value: p,
        n,
        seed,
        dof: Some(dof),
        passed: p > GOF_ALPHA,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{Laplace, Staircase};
    use crate::params::PrivacyParams;

    fn params(eps: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(eps, delta).unwrap()
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q_KS(1.36) ≈ 0.0494, Q_KS(1.95) ≈ 0.0010
        let n = 1_000_000;
        let scale = (n as f64).sqrt() + 0.12 + 0.11 / (n as f64).sqrt();
        assert!((kolmogorov_p_value(1.36 / scale, n) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_p_value(1.95 / scale, n) - 0.0010).abs() < 1e-4);
        assert_eq!(kolmogorov_p_value(0.0, n), 1.0);
    }

    #[test]
    fn chi_square_known_value() {
        let (stat, dof, p) = chi_square(&[10, 10], &[10.0, 10.0]).unwrap();
        assert_eq!((stat, dof), (0.0, 1));
        assert!((p - 1.0).abs() < 1e-12);
        assert!(chi_square(&[1], &[1.0]).is_err());
    }

    #[test]
    fn staircase_and_laplace_pass() {
        let s = Staircase::new(params(1.0, 1.0), 0.25).unwrap();
        assert!(sampler_gof_continuous(&s, 100_000, 11).unwrap().passed);
        let l = Laplace::new(params(1.0, 1.0));
        assert!(sampler_gof_continuous(&l, 100_000, 11).unwrap().passed);
    }

    #[test]
    fn wrong_gamma_fails() {
        let s = Staircase::new(params(1.0, 1.0), 0.25).unwrap();
        let wrong = Staircase::new(params(1.0, 1.0), 0.75).unwrap();
        let r = sampler_gof_against(&s, &wrong, 100_000, 11).unwrap();
        assert!(!r.passed, "{r:?}");
    }

    #[test]
    fn discrete_sampler_passes() {
        let m = DiscreteStaircase::new(params(0.7, 4.0), 2).unwrap();
        let r = sampler_gof_discrete(&m, 100_000, 5).unwrap();
        assert!(r.passed, "{r:?}");
        let g = DiscreteStaircase::geometric(params(1.0, 1.0)).unwrap();
        assert!(sampler_gof_discrete(&g, 50_000, 5).unwrap().passed);
    }

    #[test]
    fn small_n_rejected() {
        let s = Staircase::new(params(1.0, 1.0), 0.25).unwrap();
        assert!(sampler_gof_continuous(&s, 100, 1).is_err());
    }
}
