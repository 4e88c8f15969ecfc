//! Pearson chi-square tests and histogram entropy.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    fn from_statistic(statistic: f64, dof: usize) -> Self {
        let p_value = if statistic <= 0.0 {
            1.0
        } else {
            ChiSquared::new(dof as f64)
                .expect("positive degrees of freedom")
                .sf(statistic)
        };
        Self {
            statistic,
            dof,
            p_value,
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Goodness of fit of `observed` counts to `expected` counts, with
/// `k - 1` degrees of freedom.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() {
        return Err(Error::Shape {
            expected: expected.len(),
            found: observed.len(),
        });
    }
    if observed.len() < 2 {
        return Err(Error::param(
            "goodness of fit needs at least two categories",
        ));
    }
    if expected.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::param("expected counts must be positive"));
    }
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    Ok(ChiSquareTest::from_statistic(statistic, observed.len() - 1))
}

/// Goodness of fit against equal expected counts `N / k`.
pub fn chi_square_uniform(observed: &[u64]) -> Result<ChiSquareTest> {
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::param("uniformity test over zero observations"));
    }
    let e = total as f64 / observed.len() as f64;
    chi_square_gof(observed, &vec![e; observed.len()])
}

/// Independence test on a 2x2 contingency table `table[row][col]`, one
/// degree of freedom, no continuity correction. Returns `None` when a row or
/// column total is zero and the test is undefined.
pub fn chi_square_2x2(table: [[u64; 2]; 2]) -> Option<ChiSquareTest> {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    if rows.contains(&0) || cols.contains(&0) {
        return None;
    }
    let n = (rows[0] + rows[1]) as f64;
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] as f64 * cols[j] as f64 / n;
            let diff = o as f64 - e;
            statistic += diff * diff / e;
        }
    }
    Some(ChiSquareTest::from_statistic(statistic, 1))
}

/// Shannon entropy in bits of the empirical distribution of `counts`.
pub fn entropy_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}
