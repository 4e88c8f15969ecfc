//! Cell occupancy of Voronoi tables.

use crate::error::{Error, Result};
use crate::eval::stats::{chi_square_uniform, entropy_bits, ChiSquareTest};
use crate::hasher::HasherModel;
use crate::matrix::{check_point, Matrix};
use crate::model::Encoder;
use crate::scalar::Scalar;

/// Histogram of points over the `psi` cells of one table, tested against
/// the uniform expectation `N / psi` with `psi - 1` degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHistogram {
    pub counts: Vec<u64>,
    pub test: ChiSquareTest,
    pub entropy_bits: f64,
}

impl CellHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let test = chi_square_uniform(&counts)?;
        let entropy_bits = entropy_bits(&counts);
        Ok(Self {
            counts,
            test,
            entropy_bits,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyReport {
    pub tables: Vec<CellHistogram>,
}

impl OccupancyReport {
    pub fn mean_entropy_bits(&self) -> f64 {
        self.tables.iter().map(|t| t.entropy_bits).sum::<f64>() / self.tables.len() as f64
    }

    pub fn non_rejected(&self, alpha: f64) -> usize {
        self.tables
            .iter()
            .filter(|t| !t.test.rejects(alpha))
            .count()
    }
}

/// Per-table histograms of `data` over the model's cells.
pub fn occupancy_stats<T: Scalar>(
    model: &HasherModel<T>,
    data: &Matrix<T>,
) -> Result<OccupancyReport> {
    if data.is_empty() {
        return Err(Error::param("occupancy of an empty dataset"));
    }
    if data.cols() != model.dim() {
        return Err(Error::Shape {
            expected: model.dim(),
            found: data.cols(),
        });
    }
    let psi = model.psi();
    let mut counts = vec![vec![0u64; psi]; model.num_tables()];
    for (i, x) in data.iter_rows().enumerate() {
        let cells = model.cells(x).map_err(|e| e.at_row(i))?;
        for (t, c) in cells.into_iter().enumerate() {
            counts[t][c] += 1;
        }
    }
    let tables = counts
        .into_iter()
        .map(CellHistogram::from_counts)
        .collect::<Result<_>>()?;
    Ok(OccupancyReport { tables })
}

/// Histogram of the cell of `points[t]` in table `t`, one point per table.
///
/// For a fixed set of anchors the cell masses are unequal; the uniform
/// `1 / psi` occupancy holds over the random draw of the anchors. Pairing
/// every point with its own independently sampled table makes the counts a
/// multinomial sample of that distribution.
pub fn cross_table_occupancy<T: Scalar>(
    model: &HasherModel<T>,
    points: &Matrix<T>,
) -> Result<CellHistogram> {
    if points.rows() != model.num_tables() {
        return Err(Error::Shape {
            expected: model.num_tables(),
            found: points.rows(),
        });
    }
    let mut counts = vec![0u64; model.psi()];
    for (t, (table, x)) in model.tables().iter().zip(points.iter_rows()).enumerate() {
        check_point(x, model.dim()).map_err(|e| e.at_row(t))?;
        counts[table.nearest(x).0] += 1;
    }
    CellHistogram::from_counts(counts)
}
