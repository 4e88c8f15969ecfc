//! Exact Euclidean k-nearest neighbours, used as retrieval ground truth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// For each query, the row indices of its `k` exact nearest database rows,
/// nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub k: usize,
    pub neighbors: Vec<Vec<u64>>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Exhaustive top-`k` by Euclidean distance, ties by ascending row index.
pub fn exact_knn<T: Scalar>(
    data: &Matrix<T>,
    queries: &Matrix<T>,
    k: usize,
) -> Result<GroundTruth> {
    exact_knn_excluding(data, queries, None, k)
}

/// As [`exact_knn`], but query `i` never lists database row `self_rows[i]`
/// (for queries that are themselves database rows).
pub fn exact_knn_excluding<T: Scalar>(
    data: &Matrix<T>,
    queries: &Matrix<T>,
    self_rows: Option<&[usize]>,
    k: usize,
) -> Result<GroundTruth> {
    if k == 0 {
        return Err(Error::param("ground truth k must be at least 1"));
    }
    if let Some(rows) = self_rows {
        if rows.len() != queries.rows() {
            return Err(Error::Shape {
                expected: queries.rows(),
                found: rows.len(),
            });
        }
    }
    let available = data.rows() - self_rows.map_or(0, |_| 1).min(data.rows());
    if k > available {
        return Err(Error::param(format!(
            "ground truth k={k} exceeds the {available} candidate rows"
        )));
    }
    if !queries.is_empty() && queries.cols() != data.cols() {
        return Err(Error::Shape {
            expected: data.cols(),
            found: queries.cols(),
        });
    }

    let neighbors = (0..queries.rows())
        .into_par_iter()
        .map(|qi| {
            let q = queries.row(qi);
            let skip = self_rows.map(|r| r[qi]);
            let mut scored: Vec<(f64, u64)> = data
                .iter_rows()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(i, x)| (squared_l2_f64(q, x), i as u64))
                .collect();
            let cmp = |a: &(f64, u64), b: &(f64, u64)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < scored.len() {
                scored.select_nth_unstable_by(k - 1, cmp);
                scored.truncate(k);
            }
            scored.sort_unstable_by(cmp);
            scored.into_iter().map(|(_, i)| i).collect()
        })
        .collect();
    Ok(GroundTruth { k, neighbors })
}

fn squared_l2_f64<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.to_f64().unwrap_or(f64::NAN) - y.to_f64().unwrap_or(f64::NAN);
            d * d
        })
        .sum()
}
