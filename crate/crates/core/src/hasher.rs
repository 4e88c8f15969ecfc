//! Voronoi diagram encoded hashing.
//!
//! A model holds `T = L / w` anchor tables. Each table is a set of `psi = 2^w`
//! distinct data points sampled at random; it partitions the input space
//! into the Voronoi cells of those anchors. A point is hashed by finding its
//! nearest anchor in every table and writing that anchor's index, in binary,
//! into the table's `w`-bit block of the code.

use std::collections::HashSet;

use rand::seq::index;

use crate::codes::{write_block, BinaryCode, CodeLayout, MAX_BLOCK_BITS};
use crate::error::{Error, Result};
use crate::matrix::{check_point, Matrix};
use crate::model::Encoder;
use crate::rng::stream_rng;
use crate::scalar::{squared_l2, Scalar};

/// Anchors of one Voronoi diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorTable<T> {
    anchors: Matrix<T>,
    table_index: usize,
}

/// Winning cell of a point in one table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellAssignment<T> {
    pub cell_index: usize,
    /// Euclidean distance to the winning anchor.
    pub distance: T,
}

impl<T: Scalar> AnchorTable<T> {
    /// Validates a table: `psi = 2^w` rows, all finite and pairwise distinct.
    pub fn new(anchors: Matrix<T>, table_index: usize) -> Result<Self> {
        bits_for_psi(anchors.rows())?;
        if anchors.cols() == 0 {
            return Err(Error::param("anchors must have at least one dimension"));
        }
        anchors.check_finite()?;
        let mut seen = HashSet::with_capacity(anchors.rows());
        for (i, row) in anchors.iter_rows().enumerate() {
            let key: Vec<u64> = row.iter().map(|v| v.canonical_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::param(format!(
                    "anchor {i} of table {table_index} duplicates an earlier anchor"
                )));
            }
        }
        Ok(Self {
            anchors,
            table_index,
        })
    }

    pub fn anchors(&self) -> &Matrix<T> {
        &self.anchors
    }

    pub fn table_index(&self) -> usize {
        self.table_index
    }

    pub fn psi(&self) -> usize {
        self.anchors.rows()
    }

    pub fn dim(&self) -> usize {
        self.anchors.cols()
    }

    /// Nearest anchor to `x`; ties go to the smallest anchor index.
    pub fn assign_cell(&self, x: &[T]) -> Result<CellAssignment<T>> {
        check_point(x, self.dim())?;
        let (cell_index, sq) = self.nearest(x);
        Ok(CellAssignment {
            cell_index,
            distance: sq.sqrt(),
        })
    }

    /// Unchecked nearest-anchor scan returning the squared distance.
    #[inline]
    pub(crate) fn nearest(&self, x: &[T]) -> (usize, T) {
        let mut best = (0, T::infinity());
        for (i, s) in self.anchors.iter_rows().enumerate() {
            let d = squared_l2(x, s);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// The `psi` raw Voronoi hash functions evaluated literally: function
    /// `i` fires when anchor `i` attains the minimum distance to `x`.
    pub fn indicator_functions(&self, x: &[T]) -> Result<Vec<bool>> {
        check_point(x, self.dim())?;
        let dists: Vec<T> = self.anchors.iter_rows().map(|s| squared_l2(x, s)).collect();
        let min = dists.iter().copied().fold(T::infinity(), T::min);
        Ok(dists.into_iter().map(|d| d == min).collect())
    }
}

/// `w` such that `psi = 2^w`, for `psi` in `2..=2^16`.
pub fn bits_for_psi(psi: usize) -> Result<u32> {
    if psi < 2 || !psi.is_power_of_two() {
        return Err(Error::param(format!(
            "psi must be a power of two and at least 2, got {psi}"
        )));
    }
    let w = psi.trailing_zeros();
    if w > MAX_BLOCK_BITS {
        return Err(Error::param(format!(
            "psi must not exceed 2^{MAX_BLOCK_BITS}, got {psi}"
        )));
    }
    Ok(w)
}

/// Binary expansion of a cell index, least significant bit first:
/// `e_j = floor(cell / 2^(j-1)) mod 2` for `j = 1..=w`.
pub fn encode_cell(cell_index: usize, w: u32) -> Result<Vec<bool>> {
    if !(1..=MAX_BLOCK_BITS).contains(&w) {
        return Err(Error::param(format!("block width {w} out of range")));
    }
    if cell_index >= 1 << w {
        return Err(Error::param(format!(
            "cell index {cell_index} does not fit in {w} bits"
        )));
    }
    Ok((0..w).map(|j| cell_index >> j & 1 == 1).collect())
}

/// Inverse of [`encode_cell`].
pub fn decode_cell(block: &[bool]) -> usize {
    block
        .iter()
        .enumerate()
        .map(|(j, &b)| (b as usize) << j)
        .sum()
}

/// A full VDeH hash family.
#[derive(Debug, Clone, PartialEq)]
pub struct HasherModel<T> {
    tables: Vec<AnchorTable<T>>,
    layout: CodeLayout,
    dim: usize,
    seed: u64,
}

impl<T: Scalar> HasherModel<T> {
    /// Samples `code_bits / log2(psi)` anchor tables from the distinct rows of
    /// `data`. Table `t` draws `psi` rows without replacement using stream `t`
    /// of `seed`; tables draw independently, so they may share anchors.
    pub fn build(data: &Matrix<T>, psi: usize, code_bits: usize, seed: u64) -> Result<Self> {
        let w = bits_for_psi(psi)?;
        let layout = CodeLayout::new(code_bits, w)?;
        if data.rows() == 0 {
            return Err(Error::InsufficientData {
                needed: psi,
                available: 0,
            });
        }
        if data.cols() == 0 {
            return Err(Error::param("data must have at least one column"));
        }
        data.check_finite()?;

        let pool = distinct_rows(data);
        if pool.len() < psi {
            return Err(Error::InsufficientData {
                needed: psi,
                available: pool.len(),
            });
        }

        let tables = (0..layout.num_blocks())
            .map(|t| {
                let mut rng = stream_rng(seed, t as u64);
                let picks: Vec<usize> = index::sample(&mut rng, pool.len(), psi)
                    .into_iter()
                    .map(|i| pool[i])
                    .collect();
                AnchorTable {
                    anchors: data.select_rows(&picks),
                    table_index: t,
                }
            })
            .collect();

        Ok(Self {
            tables,
            layout,
            dim: data.cols(),
            seed,
        })
    }

    /// Assembles a model from explicit tables, renumbering them in order.
    pub fn from_tables(tables: Vec<AnchorTable<T>>, seed: u64) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::param("a model needs at least one table"))?;
        let (psi, dim) = (first.psi(), first.dim());
        for t in &tables {
            if t.psi() != psi {
                return Err(Error::param("all tables must have the same psi"));
            }
            if t.dim() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    found: t.dim(),
                });
            }
        }
        let w = bits_for_psi(psi)?;
        let layout = CodeLayout::new(tables.len() * w as usize, w)?;
        let tables = tables
            .into_iter()
            .enumerate()
            .map(|(i, mut t)| {
                t.table_index = i;
                t
            })
            .collect();
        Ok(Self {
            tables,
            layout,
            dim,
            seed,
        })
    }

    pub fn tables(&self) -> &[AnchorTable<T>] {
        &self.tables
    }

    pub fn psi(&self) -> usize {
        1 << self.layout.block_bits()
    }

    /// `w`
    pub fn bits_per_table(&self) -> u32 {
        self.layout.block_bits()
    }

    /// `L`
    pub fn code_bits(&self) -> usize {
        self.layout.code_bits()
    }

    pub fn num_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Cell index of `x` in every table.
    pub fn cells(&self, x: &[T]) -> Result<Vec<usize>> {
        check_point(x, self.dim)?;
        Ok(self.tables.iter().map(|t| t.nearest(x).0).collect())
    }
}

impl<T: Scalar> Encoder<T> for HasherModel<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn layout(&self) -> CodeLayout {
        self.layout
    }

    fn encode_into(&self, x: &[T], words: &mut [u64]) -> Result<()> {
        check_point(x, self.dim)?;
        let w = self.layout.block_bits();
        for (t, table) in self.tables.iter().enumerate() {
            let (cell, _) = table.nearest(x);
            write_block(words, t * w as usize, w, cell as u32);
        }
        Ok(())
    }
}

/// Free-function form of [`HasherModel::build`].
pub fn build_hasher<T: Scalar>(
    data: &Matrix<T>,
    psi: usize,
    code_bits: usize,
    seed: u64,
) -> Result<HasherModel<T>> {
    HasherModel::build(data, psi, code_bits, seed)
}

/// Hashes one point.
pub fn encode_point<T: Scalar>(model: &HasherModel<T>, x: &[T]) -> Result<BinaryCode> {
    model.encode(x)
}

/// Indices of the first occurrence of every distinct row.
fn distinct_rows<T: Scalar>(data: &Matrix<T>) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(data.rows());
    data.iter_rows()
        .enumerate()
        .filter(|(_, r)| seen.insert(r.iter().map(|v| v.canonical_bits()).collect::<Vec<_>>()))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::CodeDatabase;
    use crate::synth;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid(n: usize, d: usize) -> Matrix<f64> {
        let data: Vec<f64> = (0..n * d).map(|i| ((i * 37) % 101) as f64).collect();
        Matrix::new(n, d, data).unwrap()
    }

    #[test]
    fn five_points_two_tables() {
        let data = grid(5, 5);
        let model = build_hasher(&data, 4, 4, 0).unwrap();
        assert_eq!(model.num_tables(), 2);
        assert_eq!(model.bits_per_table(), 2);
        for t in model.tables() {
            assert_eq!(t.psi(), 4);
            assert_eq!(t.dim(), 5);
        }
    }

    #[test]
    fn single_table_of_two() {
        let model = build_hasher(&grid(10, 3), 2, 1, 99).unwrap();
        assert_eq!(model.num_tables(), 1);
        assert_eq!(model.tables()[0].psi(), 2);
    }

    #[test]
    fn same_seed_same_model_different_seed_differs() {
        let data = grid(200, 4);
        let a = build_hasher(&data, 8, 24, 7).unwrap();
        let b = build_hasher(&data, 8, 24, 7).unwrap();
        let c = build_hasher(&data, 8, 24, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn parameter_errors() {
        let data = grid(20, 2);
        assert!(matches!(
            build_hasher(&data, 6, 12, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_hasher(&data, 1, 1, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_hasher(&data, 8, 10, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_hasher(&data, 32, 10, 0),
            Err(Error::InsufficientData {
                needed: 32,
                available: 20
            })
        ));
        assert!(build_hasher(&Matrix::<f64>::empty(), 2, 2, 0).is_err());
    }

    #[test]
    fn duplicates_leave_the_sampling_pool() {
        let rows = vec![
            [1.0f32, 1.0],
            [1.0, 1.0],
            [2.0, 2.0],
            [-0.0, 0.0],
            [0.0, 0.0],
        ];
        let data = Matrix::from_rows(&rows).unwrap();
        assert!(matches!(
            build_hasher(&data, 4, 2, 0),
            Err(Error::InsufficientData {
                needed: 4,
                available: 3
            })
        ));
        let model = build_hasher(&data, 2, 8, 3).unwrap();
        for t in model.tables() {
            assert_ne!(t.anchors().row(0), t.anchors().row(1));
        }
    }

    #[test]
    fn non_finite_training_data_rejected() {
        let data = Matrix::from_rows(&[[1.0f32], [f32::INFINITY], [3.0]]).unwrap();
        assert!(matches!(
            build_hasher(&data, 2, 1, 0),
            Err(Error::Row { row: 1, .. })
        ));
    }

    #[test]
    fn assign_cell_geometry() {
        let table =
            AnchorTable::new(Matrix::from_rows(&[[0.0f64, 0.0], [10.0, 0.0]]).unwrap(), 0).unwrap();
        let a = table.assign_cell(&[1.0, 0.0]).unwrap();
        assert_eq!(a.cell_index, 0);
        assert_eq!(a.distance, 1.0);
        // equidistant: smallest index wins
        assert_eq!(table.assign_cell(&[5.0, 3.0]).unwrap().cell_index, 0);
        assert!(matches!(
            table.assign_cell(&[1.0]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            table.assign_cell(&[f64::NAN, 0.0]),
            Err(Error::NonFinite { column: 0 })
        ));
    }

    #[test]
    fn anchors_are_fixed_points() {
        let data = grid(300, 3);
        let model = build_hasher(&data, 16, 32, 5).unwrap();
        for t in model.tables() {
            for i in 0..t.psi() {
                let a = t.assign_cell(t.anchors().row(i)).unwrap();
                assert_eq!(a.cell_index, i);
                assert_eq!(a.distance, 0.0);
            }
        }
    }

    #[test]
    fn anchor_table_validation() {
        let three = Matrix::from_rows(&[[0.0f32], [1.0], [2.0]]).unwrap();
        assert!(AnchorTable::new(three, 0).is_err());
        let dup = Matrix::from_rows(&[[0.0f32], [0.0]]).unwrap();
        assert!(AnchorTable::new(dup, 0).is_err());
    }

    #[test]
    fn assign_cell_matches_exhaustive_argmin() {
        let mut rng = stream_rng(11, 0);
        let anchors: Vec<[f64; 2]> = (0..8).map(|_| [rng.random(), rng.random()]).collect();
        let table = AnchorTable::new(Matrix::from_rows(&anchors).unwrap(), 0).unwrap();
        for _ in 0..64 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let mut best = 0;
            for i in 1..8 {
                let d = |j: usize| (x[0] - anchors[j][0]).powi(2) + (x[1] - anchors[j][1]).powi(2);
                if d(i) < d(best) {
                    best = i;
                }
            }
            assert_eq!(table.assign_cell(&x).unwrap().cell_index, best);
        }
    }

    #[test]
    fn encode_cell_examples() {
        assert_eq!(encode_cell(0, 2).unwrap(), vec![false, false]);
        assert_eq!(encode_cell(3, 2).unwrap(), vec![true, true]);
        assert_eq!(encode_cell(5, 3).unwrap(), vec![true, false, true]);
        assert!(encode_cell(4, 2).is_err());
        assert!(encode_cell(0, 0).is_err());
        assert!(encode_cell(0, 17).is_err());
    }

    #[test]
    fn encode_point_single_table() {
        let anchors = Matrix::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
        let model =
            HasherModel::from_tables(vec![AnchorTable::new(anchors, 0).unwrap()], 0).unwrap();
        let code = encode_point(&model, &[1.0, 2.0]).unwrap();
        assert_eq!(code.bits(), vec![false]);
        assert_eq!(
            encode_point(&model, &[3.0, 4.1]).unwrap().bits(),
            vec![true]
        );
    }

    #[test]
    fn encode_point_composes_cell_encodings() {
        let data: Matrix<f64> = synth::uniform(500, 4, -1.0, 1.0, 21).unwrap();
        let model = build_hasher(&data, 8, 24, 4).unwrap();
        let probes: Matrix<f64> = synth::uniform(100, 4, -1.5, 1.5, 22).unwrap();
        for x in probes.iter_rows() {
            let code = encode_point(&model, x).unwrap();
            assert_eq!(code.len(), 24);
            let mut expected = Vec::new();
            for t in model.tables() {
                expected.extend(encode_cell(t.assign_cell(x).unwrap().cell_index, 3).unwrap());
            }
            assert_eq!(code.bits(), expected);
        }
    }

    #[test]
    fn encode_dataset_matches_point_loop() {
        let data: Matrix<f32> = synth::uniform(1000, 6, 0.0, 1.0, 1).unwrap();
        let model = build_hasher(&data, 16, 64, 2).unwrap();
        let db = model.encode_dataset(&data).unwrap();
        let looped: Vec<_> = data
            .iter_rows()
            .map(|x| encode_point(&model, x).unwrap())
            .collect();
        assert_eq!(
            db,
            CodeDatabase::from_codes(model.layout(), &looped).unwrap()
        );
    }

    #[test]
    fn encode_dataset_edge_cases() {
        let data = grid(10, 2);
        let model = build_hasher(&data, 4, 8, 0).unwrap();
        assert!(model.encode_dataset(&Matrix::empty()).unwrap().is_empty());

        let twice = Matrix::from_rows(&[[3.0, 4.0], [3.0, 4.0]]).unwrap();
        let db = model.encode_dataset(&twice).unwrap();
        assert_eq!(db.code(0), db.code(1));

        let bad = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [f64::NAN, 1.0]]).unwrap();
        assert!(matches!(
            model.encode_dataset(&bad),
            Err(Error::Row { row: 2, .. })
        ));
        assert!(matches!(
            model.encode_dataset(&grid(3, 3)),
            Err(Error::Shape {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn indicator_functions_fire_once_off_boundary() {
        let data: Matrix<f64> = synth::uniform(100, 2, 0.0, 1.0, 3).unwrap();
        let model = build_hasher(&data, 8, 3, 1).unwrap();
        let table = &model.tables()[0];
        for x in synth::uniform::<f64>(200, 2, 0.0, 1.0, 4)
            .unwrap()
            .iter_rows()
        {
            let h = table.indicator_functions(x).unwrap();
            assert_eq!(h.iter().filter(|b| **b).count(), 1);
            assert!(h[table.assign_cell(x).unwrap().cell_index]);
        }
    }

    proptest! {
        #[test]
        fn encode_cell_round_trips(w in 1u32..=16, seed in any::<u64>()) {
            let cell = (seed % (1u64 << w)) as usize;
            let bits = encode_cell(cell, w).unwrap();
            prop_assert_eq!(bits.len(), w as usize);
            prop_assert_eq!(decode_cell(&bits), cell);
        }
    }
}
