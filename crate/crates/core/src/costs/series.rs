//! Power-weighted geometric sums `c_i = Σ_{k>=0} b^k k^i` and exact binomials.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Largest `n` for which [`binomial_row`] is defined.
pub const MAX_BINOMIAL_N: usize = 64;

/// Row `n` of Pascal's triangle, computed in exact integer arithmetic.
pub fn binomial_row(n: usize) -> Result<Vec<u128>> {
    if n > MAX_BINOMIAL_N {
        return Err(invalid(
            "n",
            format!("binomial coefficients are limited to n <= {MAX_BINOMIAL_N}, got {n}"),
        ));
    }
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(1);
        next.extend(row.windows(2).map(|w| w[0] + w[1]));
        next.push(1);
        row = next;
    }
    Ok(row)
}

/// Values `c_0..=c_n` for a fixed decay factor `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSeries {
    b: f64,
    c: Vec<f64>,
}

impl MomentSeries {
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn get(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Series from `b` and a separately computed `1 - b`.
    pub(crate) fn with_complement(b: f64, one_minus_b: f64, n: usize) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(invalid("b", format!("must lie in (0, 1), got {b}")));
        }
        let row_len = n.max(1);
        let rows: Vec<Vec<u128>> = (0..=row_len).map(binomial_row).collect::<Result<_>>()?;
        let mut c = Vec::with_capacity(n + 1);
        c.push(1.0 / one_minus_b);
        if n >= 1 {
            let first = b / (one_minus_b * one_minus_b);
            c.push(first);
            for i in 1..n {
                // c_{i+1} = b/(1-b)^2 + b/(1-b) Σ_{j=1}^{i} C(i+1, j) c_j
                let s: f64 = (1..=i).map(|j| rows[i + 1][j] as f64 * c[j]).sum();
                c.push(first + b / one_minus_b * s);
            }
        }
        Ok(Self { b, c })
    }
}

/// `c_0..=c_n` by the moment recursion.
pub fn moment_series(b: f64, n: usize) -> Result<MomentSeries> {
    MomentSeries::with_complement(b, 1.0 - b, n)
}
