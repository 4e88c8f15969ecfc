//! Pairwise independence of code bits.

use rayon::prelude::*;

use crate::codes::{BinaryCode, CodeDatabase, CodeLayout};
use crate::error::{Error, Result};
use crate::eval::stats::{chi_square_2x2, ChiSquareTest};
use crate::hasher::{AnchorTable, HasherModel};
use crate::matrix::Matrix;
use crate::model::Encoder;
use crate::rng::stream_rng;
use crate::scalar::Scalar;

pub use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    /// Both bits come from the same table's block.
    IntraBlock,
    /// The bits come from different tables.
    InterBlock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitPairTest {
    pub first: usize,
    pub second: usize,
    pub kind: PairKind,
    /// `None` when either bit is constant over the sample.
    pub test: Option<ChiSquareTest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub samples: usize,
    pub pairs: Vec<BitPairTest>,
}

impl IndependenceReport {
    pub fn degenerate(&self) -> usize {
        self.pairs.iter().filter(|p| p.test.is_none()).count()
    }

    /// Number of tested pairs, optionally restricted to one kind.
    pub fn tested(&self, kind: Option<PairKind>) -> usize {
        self.select(kind).filter(|p| p.test.is_some()).count()
    }

    /// Fraction of tested pairs whose p-value is at least `alpha`.
    pub fn non_rejection_rate(&self, alpha: f64, kind: Option<PairKind>) -> f64 {
        let tested = self.tested(kind);
        if tested == 0 {
            return f64::NAN;
        }
        let kept = self
            .select(kind)
            .filter_map(|p| p.test)
            .filter(|t| !t.rejects(alpha))
            .count();
        kept as f64 / tested as f64
    }

    fn select(&self, kind: Option<PairKind>) -> impl Iterator<Item = &BitPairTest> {
        self.pairs
            .iter()
            .filter(move |p| kind.is_none_or(|k| p.kind == k))
    }
}

/// 2x2 chi-square independence test for every pair of bit positions.
pub fn bit_independence_test(codes: &CodeDatabase) -> Result<IndependenceReport> {
    let layout = codes.layout();
    let l = layout.code_bits();
    if l < 2 {
        return Err(Error::param(
            "independence needs at least two bit positions",
        ));
    }
    if codes.is_empty() {
        return Err(Error::param("independence test over zero codes"));
    }
    let n = codes.len();
    if n < 1000 {
        log::warn!("bit independence test on only {n} codes");
    }

    // column-major bitsets: columns[p] has bit i set when code i has bit p set
    let col_words = n.div_ceil(64);
    let mut columns = vec![vec![0u64; col_words]; l];
    for i in 0..n {
        let words = codes.code_words(i);
        for (p, col) in columns.iter_mut().enumerate() {
            if words[p / 64] >> (p % 64) & 1 == 1 {
                col[i / 64] |= 1 << (i % 64);
            }
        }
    }
    let ones: Vec<u64> = columns
        .iter()
        .map(|c| c.iter().map(|w| w.count_ones() as u64).sum())
        .collect();

    let w = layout.block_bits() as usize;
    let n = n as u64;
    let pairs = (0..l)
        .into_par_iter()
        .flat_map_iter(|p| {
            let (columns, ones) = (&columns, &ones);
            (p + 1..l).map(move |q| {
                let both: u64 = columns[p]
                    .iter()
                    .zip(&columns[q])
                    .map(|(a, b)| (a & b).count_ones() as u64)
                    .sum();
                let only_p = ones[p] - both;
                let only_q = ones[q] - both;
                let neither = n - both - only_p - only_q;
                BitPairTest {
                    first: p,
                    second: q,
                    kind: if p / w == q / w {
                        PairKind::IntraBlock
                    } else {
                        PairKind::InterBlock
                    },
                    test: chi_square_2x2([[neither, only_q], [only_p, both]]),
                }
            })
        })
        .collect();
    Ok(IndependenceReport {
        samples: n as usize,
        pairs,
    })
}

/// Codes of `n` points where every point is hashed by its own, freshly drawn
/// hash family. `draw` samples one point of the target distribution; it
/// supplies both the anchors (`psi` per table) and the hashed point.
///
/// The independence of code bits is a statement over the random choice of
/// anchors as well as the point. Codes produced by a single fixed model
/// share that model's cell geometry and are correlated through it.
pub fn codes_over_random_families<T, F>(
    draw: F,
    psi: usize,
    code_bits: usize,
    n: usize,
    seed: u64,
) -> Result<CodeDatabase>
where
    T: Scalar,
    F: Fn(&mut ChaCha8Rng) -> Vec<T> + Sync,
{
    let w = crate::hasher::bits_for_psi(psi)?;
    let layout = CodeLayout::new(code_bits, w)?;
    let codes = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let tables = (0..layout.num_blocks())
                .map(|t| {
                    let rows: Vec<Vec<T>> = (0..psi).map(|_| draw(&mut rng)).collect();
                    AnchorTable::new(Matrix::from_rows(&rows)?, t)
                })
                .collect::<Result<Vec<_>>>()?;
            let model = HasherModel::from_tables(tables, seed)?;
            let x = draw(&mut rng);
            model.encode(&x)
        })
        .collect::<Result<Vec<BinaryCode>>>()?;
    CodeDatabase::from_codes(layout, &codes)
}
