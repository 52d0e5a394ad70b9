//! Selection from a finite candidate set with probability proportional to
//! the staircase density of each candidate's score.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanisms::Staircase;
use crate::params::PrivacyParams;
use crate::rng::{SeedStreams, UniformSource};

/// Candidates with non-negative scores `C(D, r)` and the score sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateScoring {
    candidates: Vec<String>,
    scores: Vec<f64>,
    sensitivity: f64,
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    candidate_id: String,
    score: f64,
}

impl CandidateScoring {
    pub fn new(candidates: Vec<String>, scores: Vec<f64>, sensitivity: f64) -> Result<Self> {
        if candidates.len() != scores.len() {
            return Err(invalid("scores", "one score per candidate is required"));
        }
        if let Some(s) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(invalid(
                "scores",
                format!("scores must be finite and non-negative, got {s}"),
            ));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(invalid(
                "sensitivity",
                format!("must be positive and finite, got {sensitivity}"),
            ));
        }
        Ok(Self {
            candidates,
            scores,
            sensitivity,
        })
    }

    /// Candidates named by their position.
    pub fn from_scores(scores: Vec<f64>, sensitivity: f64) -> Result<Self> {
        let ids = (0..scores.len()).map(|i| i.to_string()).collect();
        Self::new(ids, scores, sensitivity)
    }

    /// Parses CSV with header `candidate_id,score`.
    pub fn parse_csv(text: &str, sensitivity: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                reason: e.to_string(),
            })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["candidate_id", "score"] {
            return Err(Error::Parse {
                line: 1,
                reason: format!(
                    "expected header `candidate_id,score`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut ids = Vec::new();
        let mut scores = Vec::new();
        for row in reader.deserialize::<ScoreRow>() {
            let row = row.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                reason: e.to_string(),
            })?;
            ids.push(row.candidate_id);
            scores.push(row.score);
        }
        Self::new(ids, scores, sensitivity)
    }

    pub fn from_path(path: impl AsRef<Path>, sensitivity: f64) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?, sensitivity)
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// `p(r) ∝ f_γ(C(D, r))` over the declared candidates.
///
/// The staircase levels are compared in the log domain, so scores far out
/// in the tail do not underflow to an all-zero vector.
pub fn abstract_distribution(scoring: &CandidateScoring, params: &PrivacyParams, gamma: f64) -> Result<Vec<f64>> {
    if scoring.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if params.delta() != scoring.sensitivity {
        return Err(invalid(
            "delta",
            format!(
                "must equal the scoring sensitivity {} (got {})",
                scoring.sensitivity,
                params.delta()
            ),
        ));
    }
    let mech = Staircase::new(*params, gamma)?;
    let levels: Vec<f64> = scoring.scores.iter().map(|&s| mech.level(s)).collect();
    let base = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = levels.iter().map(|&l| (-params.epsilon() * (l - base)).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Inverse-CDF draw in declared candidate order; returns the index.
pub fn abstract_sample(
    scoring: &CandidateScoring,
    params: &PrivacyParams,
    gamma: f64,
    rng: &mut dyn UniformSource,
) -> Result<usize> {
    let probs = abstract_distribution(scoring, params, gamma)?;
    Ok(pick(&probs, rng.next_uniform()))
}

/// `n` seeded draws, identical for a given seed regardless of threading.
pub fn abstract_sample_many(
    scoring: &CandidateScoring,
    params: &PrivacyParams,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let probs = abstract_distribution(scoring, params, gamma)?;
    Ok(SeedStreams::new(seed).draw(n, |rng| pick(&probs, rng.next_uniform())))
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::chi_square;
    use crate::rng::ReplaySource;

    fn params(eps: f64, delta: f64) -> PrivacyParams {
        PrivacyParams::new(eps, delta).unwrap()
    }

    #[test]
    fn equal_scores_are_uniform() {
        let s = CandidateScoring::from_scores(vec![2.5; 7], 1.0).unwrap();
        let p = abstract_distribution(&s, &params(1.0, 1.0), 0.3).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn two_candidate_examples() {
        let p = params(0.9, 2.0);
        let b = p.b();
        let s = CandidateScoring::from_scores(vec![0.0, 2.0], 2.0).unwrap();
        let v = abstract_distribution(&s, &p, 1.0).unwrap();
        assert!((v[0] - 1.0 / (1.0 + b)).abs() < 1e-15);
        assert!((v[1] - b / (1.0 + b)).abs() < 1e-15);
        let s = CandidateScoring::from_scores(vec![0.0, 1.0], 2.0).unwrap();
        let v = abstract_distribution(&s, &p, 1.0).unwrap();
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn sums_to_one_far_in_tail() {
        let s = CandidateScoring::from_scores(vec![1e6, 1e6 + 3.0, 2e6], 1.0).unwrap();
        let v = abstract_distribution(&s, &params(2.0, 1.0), 0.5).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v[0] > 0.0);
    }

    #[test]
    fn errors() {
        let empty = CandidateScoring::from_scores(vec![], 1.0).unwrap();
        assert!(matches!(
            abstract_distribution(&empty, &params(1.0, 1.0), 0.5),
            Err(Error::EmptyCandidates)
        ));
        assert!(CandidateScoring::from_scores(vec![-1.0], 1.0).is_err());
        assert!(CandidateScoring::from_scores(vec![1.0], 0.0).is_err());
        let s = CandidateScoring::from_scores(vec![1.0], 1.0).unwrap();
        assert!(abstract_distribution(&s, &params(1.0, 2.0), 0.5).is_err());
    }

    #[test]
    fn sampling_conventions() {
        let p = params(1.0, 1.0);
        let single = CandidateScoring::from_scores(vec![4.0], 1.0).unwrap();
        assert!(abstract_sample_many(&single, &p, 0.5, 100, 3)
            .unwrap()
            .iter()
            .all(|&i| i == 0));
        let s = CandidateScoring::from_scores(vec![3.0, 0.0, 1.0], 1.0).unwrap();
        let mut zero = ReplaySource::constant(0.0);
        assert_eq!(abstract_sample(&s, &p, 0.5, &mut zero).unwrap(), 0);
    }

    #[test]
    fn uniform_frequencies_pass_chi_square() {
        let s = CandidateScoring::from_scores(vec![1.0; 8], 1.0).unwrap();
        let draws = abstract_sample_many(&s, &params(1.0, 1.0), 0.5, 100_000, 17).unwrap();
        let mut counts = vec![0u64; 8];
        for i in draws {
            counts[i] += 1;
        }
        let (_, _, pv) = chi_square(&counts, &[12_500.0; 8]).unwrap();
        assert!(pv > 1e-3);
    }

    #[test]
    fn csv_input() {
        let text = "candidate_id,score\nalpha, 0.5\n# skipped\nbeta,2\n";
        let s = CandidateScoring::parse_csv(text, 1.0).unwrap();
        assert_eq!(s.candidates(), ["alpha", "beta"]);
        assert_eq!(s.scores(), [0.5, 2.0]);
        assert!(CandidateScoring::parse_csv("id,score\na,1\n", 1.0).is_err());
        assert!(CandidateScoring::parse_csv("candidate_id,score\na,x\n", 1.0).is_err());
    }

    /// Sup-norm error at grid nodes between `p_j / h` and `f_γ(r_j)`.
    fn node_error(h: f64) -> f64 {
        let p = params(1.0, 1.0);
        let reach = 40.0;
        let n = (reach / h).round() as i64;
        let nodes: Vec<f64> = (-n..=n).map(|j| j as f64 * h).collect();
        let scores = nodes.iter().map(|r| r.abs()).collect();
        let s = CandidateScoring::from_scores(scores, 1.0).unwrap();
        let v = abstract_distribution(&s, &p, 0.5).unwrap();
        let mech = Staircase::new(p, 0.5).unwrap();
        nodes
            .iter()
            .zip(&v)
            .map(|(&r, &q)| (q / h - mech.pdf(r).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_candidates_approach_continuous_density() {
        let coarse = node_error(1.0 / 64.0);
        let fine = node_error(1.0 / 128.0);
        assert!(fine < coarse);
        let ratio = fine / coarse;
        assert!((0.4..0.6).contains(&ratio), "{coarse} {fine} {ratio}");
    }
}
