//! Bit-packed binary codes, the block-wise VDeH distance, plain Hamming
//! distance and exhaustive k-nearest-neighbour search over a code database.
//!
//! A code of `L` bits is stored LSB-first in `u64` words: bit `p` lives in
//! word `p / 64` at position `p % 64`. Block `t` of width `w` occupies bit
//! positions `[t*w, (t+1)*w)`, so writing a cell index into a block stores
//! its binary expansion with `e_1` at the lowest position. Pad bits past `L`
//! in the final word are always zero.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest supported block width (cells per table up to 65,536).
pub const MAX_BLOCK_BITS: u32 = 16;

/// Code length `L` and block width `w` shared by a family of codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeLayout {
    code_bits: usize,
    block_bits: u32,
}

impl CodeLayout {
    pub fn new(code_bits: usize, block_bits: u32) -> Result<Self> {
        if !(1..=MAX_BLOCK_BITS).contains(&block_bits) {
            return Err(Error::param(format!(
                "block width must be in 1..={MAX_BLOCK_BITS}, got {block_bits}"
            )));
        }
        if code_bits == 0 {
            return Err(Error::param("code length must be at least one bit"));
        }
        if !code_bits.is_multiple_of(block_bits as usize) {
            return Err(Error::param(format!(
                "code length {code_bits} is not divisible by block width {block_bits}"
            )));
        }
        if code_bits > u32::MAX as usize {
            return Err(Error::param("code length exceeds 2^32 - 1 bits"));
        }
        Ok(Self {
            code_bits,
            block_bits,
        })
    }

    /// `L`
    pub fn code_bits(&self) -> usize {
        self.code_bits
    }

    /// `w`
    pub fn block_bits(&self) -> u32 {
        self.block_bits
    }

    /// `T = L / w`
    pub fn num_blocks(&self) -> usize {
        self.code_bits / self.block_bits as usize
    }

    pub fn words_per_code(&self) -> usize {
        self.code_bits.div_ceil(64)
    }

    /// Scale factor `w / L` applied to a mismatching-block count.
    pub fn block_scale(&self) -> f64 {
        self.block_bits as f64 / self.code_bits as f64
    }

    fn pad_mask(&self) -> u64 {
        match self.code_bits % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        }
    }
}

/// One packed `L`-bit code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    layout: CodeLayout,
    words: Vec<u64>,
}

impl BinaryCode {
    pub fn zeros(layout: CodeLayout) -> Self {
        Self {
            layout,
            words: vec![0; layout.words_per_code()],
        }
    }

    /// Wraps raw words; pad bits must be zero.
    pub fn from_words(layout: CodeLayout, words: Vec<u64>) -> Result<Self> {
        check_words(layout, &words)?;
        Ok(Self { layout, words })
    }

    pub fn from_bits(layout: CodeLayout, bits: &[bool]) -> Result<Self> {
        if bits.len() != layout.code_bits {
            return Err(Error::Shape {
                expected: layout.code_bits,
                found: bits.len(),
            });
        }
        let mut code = Self::zeros(layout);
        for (p, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            code.words[p / 64] |= 1 << (p % 64);
        }
        Ok(code)
    }

    /// Builds a code whose block `t` holds `blocks[t]`.
    pub fn from_blocks(layout: CodeLayout, blocks: &[u32]) -> Result<Self> {
        if blocks.len() != layout.num_blocks() {
            return Err(Error::Shape {
                expected: layout.num_blocks(),
                found: blocks.len(),
            });
        }
        let mut code = Self::zeros(layout);
        for (t, &v) in blocks.iter().enumerate() {
            if layout.block_bits < 32 && v >> layout.block_bits != 0 {
                return Err(Error::param(format!(
                    "block value {v} does not fit in {} bits",
                    layout.block_bits
                )));
            }
            write_block(
                &mut code.words,
                t * layout.block_bits as usize,
                layout.block_bits,
                v,
            );
        }
        Ok(code)
    }

    pub fn layout(&self) -> CodeLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.layout.code_bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, p: usize) -> bool {
        assert!(p < self.layout.code_bits, "bit {p} out of range");
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|p| self.bit(p)).collect()
    }

    /// Value stored in block `t`, i.e. the cell index it encodes.
    pub fn block(&self, t: usize) -> u32 {
        assert!(t < self.layout.num_blocks(), "block {t} out of range");
        read_block(
            &self.words,
            t * self.layout.block_bits as usize,
            self.layout.block_bits,
        )
    }

    pub fn blocks(&self) -> Vec<u32> {
        (0..self.layout.num_blocks())
            .map(|t| self.block(t))
            .collect()
    }

    /// Bitwise complement within the `L` code bits.
    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= self.layout.pad_mask();
        }
        Self {
            layout: self.layout,
            words,
        }
    }
}

impl fmt::Display for BinaryCode {
    /// Bits in position order, blocks separated by `|`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.layout.block_bits as usize;
        for p in 0..self.len() {
            if p > 0 && p % w == 0 {
                f.write_str("|")?;
            }
            f.write_str(if self.bit(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn check_words(layout: CodeLayout, words: &[u64]) -> Result<()> {
    if words.len() != layout.words_per_code() {
        return Err(Error::Shape {
            expected: layout.words_per_code(),
            found: words.len(),
        });
    }
    if words.last().is_some_and(|w| w & !layout.pad_mask() != 0) {
        return Err(Error::Format(
            "nonzero pad bits past the code length".into(),
        ));
    }
    Ok(())
}

#[inline]
pub(crate) fn write_block(words: &mut [u64], offset: usize, width: u32, value: u32) {
    let (word, shift) = (offset / 64, offset % 64);
    let value = value as u64;
    words[word] |= value << shift;
    if shift + width as usize > 64 {
        words[word + 1] |= value >> (64 - shift);
    }
}

#[inline]
fn read_block(words: &[u64], offset: usize, width: u32) -> u32 {
    let (word, shift) = (offset / 64, offset % 64);
    let mut v = words[word] >> shift;
    if shift + width as usize > 64 {
        v |= words[word + 1] << (64 - shift);
    }
    (v & ((1u64 << width) - 1)) as u32
}

/// Word-level distance kernels over packed codes of one layout.
pub mod kernel {
    use super::CodeLayout;

    /// Population count of `a XOR b`.
    #[inline]
    pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
        a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
    }

    /// Number of `w`-bit blocks in which `a` and `b` differ.
    #[inline]
    pub fn mismatched_blocks_words(a: &[u64], b: &[u64], layout: CodeLayout) -> u32 {
        match layout.block_bits() {
            1 => hamming_words(a, b),
            2 => folded::<2>(a, b, 0x5555_5555_5555_5555),
            4 => folded::<4>(a, b, 0x1111_1111_1111_1111),
            8 => folded::<8>(a, b, 0x0101_0101_0101_0101),
            16 => folded::<16>(a, b, 0x0001_0001_0001_0001),
            w => straddling(a, b, w, layout.num_blocks()),
        }
    }

    /// Widths dividing 64: OR each block's bits down into its lowest bit,
    /// then count the surviving low bits.
    #[inline]
    fn folded<const W: u32>(a: &[u64], b: &[u64], low_bits: u64) -> u32 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let mut v = x ^ y;
                let mut s = 1;
                while s < W {
                    v |= v >> s;
                    s <<= 1;
                }
                (v & low_bits).count_ones()
            })
            .sum()
    }

    /// Widths that do not divide 64; blocks may cross a word boundary.
    fn straddling(a: &[u64], b: &[u64], width: u32, blocks: usize) -> u32 {
        let mask = (1u64 << width) - 1;
        let w = width as usize;
        let mut count = 0;
        for t in 0..blocks {
            let offset = t * w;
            let (i, shift) = (offset / 64, offset % 64);
            let mut v = (a[i] ^ b[i]) >> shift;
            if shift + w > 64 {
                v |= (a[i + 1] ^ b[i + 1]) << (64 - shift);
            }
            count += (v & mask != 0) as u32;
        }
        count
    }
}

fn check_same_layout(a: &BinaryCode, b: &BinaryCode) -> Result<()> {
    if a.layout != b.layout {
        return Err(Error::param(format!(
            "code layouts differ: (L={}, w={}) vs (L={}, w={})",
            a.layout.code_bits, a.layout.block_bits, b.layout.code_bits, b.layout.block_bits
        )));
    }
    Ok(())
}

/// Number of blocks in which the two codes differ.
pub fn mismatched_blocks(a: &BinaryCode, b: &BinaryCode) -> Result<u32> {
    check_same_layout(a, b)?;
    Ok(kernel::mismatched_blocks_words(
        &a.words, &b.words, a.layout,
    ))
}

/// VDeH distance: `(w / L)` times the number of mismatching blocks.
pub fn vdeh_distance(a: &BinaryCode, b: &BinaryCode) -> Result<f64> {
    Ok(a.layout.block_scale() * mismatched_blocks(a, b)? as f64)
}

/// Fraction of tables in which both codes share a cell: `1 - vdeh_distance`.
/// This is the Monte Carlo estimate of the Voronoi (isolation) kernel.
pub fn similarity_estimate(a: &BinaryCode, b: &BinaryCode) -> Result<f64> {
    Ok(1.0 - vdeh_distance(a, b)?)
}

pub fn hamming_distance(a: &BinaryCode, b: &BinaryCode) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::param(format!(
            "code lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(kernel::hamming_words(&a.words, &b.words))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    Vdeh,
    Hamming,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vdeh" => Ok(Metric::Vdeh),
            "hamming" => Ok(Metric::Hamming),
            other => Err(Error::param(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Vdeh => "vdeh",
            Metric::Hamming => "hamming",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row_id: u64,
    /// Mismatching blocks (VDeH) or differing bits (Hamming).
    pub count: u32,
    /// `count` scaled by `w / L` for VDeH; equal to `count` for Hamming.
    pub distance: f64,
}

/// Packed codes for `N` points with stable external row ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeDatabase {
    layout: CodeLayout,
    words: Vec<u64>,
    row_ids: Vec<u64>,
}

impl CodeDatabase {
    pub fn empty(layout: CodeLayout) -> Self {
        Self {
            layout,
            words: Vec::new(),
            row_ids: Vec::new(),
        }
    }

    /// Codes with row ids `0..N`.
    pub fn from_codes(layout: CodeLayout, codes: &[BinaryCode]) -> Result<Self> {
        let ids = (0..codes.len() as u64).collect();
        Self::from_codes_with_ids(layout, codes, ids)
    }

    pub fn from_codes_with_ids(
        layout: CodeLayout,
        codes: &[BinaryCode],
        row_ids: Vec<u64>,
    ) -> Result<Self> {
        let mut words = Vec::with_capacity(codes.len() * layout.words_per_code());
        for (i, c) in codes.iter().enumerate() {
            if c.layout != layout {
                return Err(Error::param("code layout differs from database layout").at_row(i));
            }
            words.extend_from_slice(&c.words);
        }
        Self::from_raw(layout, words, row_ids)
    }

    /// Packed words for all codes back to back, plus one id per code.
    pub fn from_raw(layout: CodeLayout, words: Vec<u64>, row_ids: Vec<u64>) -> Result<Self> {
        let wpc = layout.words_per_code();
        if words.len() != row_ids.len() * wpc {
            return Err(Error::Shape {
                expected: row_ids.len() * wpc,
                found: words.len(),
            });
        }
        for (i, chunk) in words.chunks_exact(wpc).enumerate() {
            check_words(layout, chunk).map_err(|e| e.at_row(i))?;
        }
        let mut seen = HashSet::with_capacity(row_ids.len());
        if let Some(dup) = row_ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::param(format!("duplicate row id {dup}")));
        }
        Ok(Self {
            layout,
            words,
            row_ids,
        })
    }

    pub fn layout(&self) -> CodeLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn raw_words(&self) -> &[u64] {
        &self.words
    }

    pub fn code_words(&self, i: usize) -> &[u64] {
        let wpc = self.layout.words_per_code();
        &self.words[i * wpc..(i + 1) * wpc]
    }

    pub fn code(&self, i: usize) -> BinaryCode {
        BinaryCode {
            layout: self.layout,
            words: self.code_words(i).to_vec(),
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = BinaryCode> + '_ {
        (0..self.len()).map(|i| self.code(i))
    }

    /// Replaces the row ids, e.g. with indices into an original dataset.
    pub fn with_row_ids(self, row_ids: Vec<u64>) -> Result<Self> {
        Self::from_raw(self.layout, self.words, row_ids)
    }

    /// The `k` nearest rows to `query` by exhaustive scan, ascending by
    /// distance with ties broken by ascending row id. `k > N` returns all
    /// rows; an empty database yields an empty list and a logged warning.
    pub fn knn_query(&self, query: &BinaryCode, k: usize, metric: Metric) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        match metric {
            Metric::Vdeh if query.layout != self.layout => {
                return Err(Error::param("query layout differs from database layout"))
            }
            Metric::Hamming if query.len() != self.layout.code_bits => {
                return Err(Error::param(
                    "query length differs from database code length",
                ))
            }
            _ => {}
        }
        if self.is_empty() {
            log::warn!("knn query against an empty code database");
            return Ok(Vec::new());
        }

        let wpc = self.layout.words_per_code();
        let mut scored: Vec<(u32, u64)> = self
            .words
            .chunks_exact(wpc)
            .zip(&self.row_ids)
            .map(|(code, &id)| {
                let count = match metric {
                    Metric::Vdeh => {
                        kernel::mismatched_blocks_words(&query.words, code, self.layout)
                    }
                    Metric::Hamming => kernel::hamming_words(&query.words, code),
                };
                (count, id)
            })
            .collect();

        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable(k - 1);
            scored.truncate(k);
        }
        scored.sort_unstable();

        let scale = match metric {
            Metric::Vdeh => self.layout.block_scale(),
            Metric::Hamming => 1.0,
        };
        Ok(scored
            .into_iter()
            .map(|(count, row_id)| Neighbor {
                row_id,
                count,
                distance: scale * count as f64,
            })
            .collect())
    }

    /// Independent queries fanned out over the rayon pool; results are in
    /// query order and identical to sequential calls.
    pub fn batch_knn(
        &self,
        queries: &[BinaryCode],
        k: usize,
        metric: Metric,
    ) -> Result<Vec<Vec<Neighbor>>> {
        queries
            .par_iter()
            .map(|q| self.knn_query(q, k, metric))
            .collect()
    }
}

/// Ascending distance, then ascending row id.
pub fn neighbor_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.count.cmp(&b.count).then(a.row_id.cmp(&b.row_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout(l: usize, w: u32) -> CodeLayout {
        CodeLayout::new(l, w).unwrap()
    }

    #[test]
    fn layout_validation() {
        assert!(CodeLayout::new(4, 2).is_ok());
        assert!(CodeLayout::new(5, 2).is_err());
        assert!(CodeLayout::new(0, 1).is_err());
        assert!(CodeLayout::new(17, 17).is_err());
        assert!(CodeLayout::new(16, 0).is_err());
    }

    #[test]
    fn worked_distance_example() {
        // [00|11] vs [00|10]
        let l = layout(4, 2);
        let a = BinaryCode::from_bits(l, &[false, false, true, true]).unwrap();
        let b = BinaryCode::from_bits(l, &[false, false, true, false]).unwrap();
        assert_eq!(vdeh_distance(&a, &b).unwrap(), 0.5);
        assert_eq!(vdeh_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(similarity_estimate(&a, &b).unwrap(), 0.5);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 1);
    }

    #[test]
    fn all_blocks_differ() {
        let l = layout(12, 3);
        let a = BinaryCode::from_blocks(l, &[0, 1, 2, 3]).unwrap();
        let b = BinaryCode::from_blocks(l, &[7, 6, 5, 4]).unwrap();
        assert_eq!(vdeh_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(similarity_estimate(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn complement_is_maximal_hamming() {
        let l = layout(70, 7);
        let a = BinaryCode::from_blocks(l, &[1, 5, 9, 0, 127, 3, 3, 64, 2, 100]).unwrap();
        let c = a.complement();
        assert_eq!(hamming_distance(&a, &c).unwrap(), 70);
        assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        // pad bits stay clear
        assert_eq!(c.words()[1] >> 6, 0);
    }

    #[test]
    fn mismatched_layouts_rejected() {
        let a = BinaryCode::zeros(layout(8, 2));
        let b = BinaryCode::zeros(layout(8, 4));
        let c = BinaryCode::zeros(layout(16, 4));
        assert!(matches!(vdeh_distance(&a, &b), Err(Error::Parameter(_))));
        assert_eq!(hamming_distance(&a, &b).unwrap(), 0);
        assert!(hamming_distance(&b, &c).is_err());
    }

    #[test]
    fn blocks_straddling_words_round_trip() {
        let l = layout(130, 5);
        let vals: Vec<u32> = (0..26).map(|i| (i * 7 + 3) % 32).collect();
        let code = BinaryCode::from_blocks(l, &vals).unwrap();
        assert_eq!(code.blocks(), vals);
        assert!(BinaryCode::from_blocks(l, &[32; 26]).is_err());
    }

    #[test]
    fn from_words_rejects_pad_bits() {
        let l = layout(10, 1);
        assert!(BinaryCode::from_words(l, vec![1 << 10]).is_err());
        assert!(BinaryCode::from_words(l, vec![1 << 9]).is_ok());
    }

    #[test]
    fn display_separates_blocks() {
        let l = layout(4, 2);
        let a = BinaryCode::from_blocks(l, &[0, 3]).unwrap();
        assert_eq!(a.to_string(), "00|11");
    }

    fn tiny_db() -> CodeDatabase {
        let l = layout(4, 2);
        let codes: Vec<_> = [[0, 0], [0, 1], [3, 3], [0, 0]]
            .iter()
            .map(|b| BinaryCode::from_blocks(l, b).unwrap())
            .collect();
        CodeDatabase::from_codes_with_ids(l, &codes, vec![10, 11, 12, 9]).unwrap()
    }

    #[test]
    fn knn_orders_by_distance_then_row_id() {
        let db = tiny_db();
        let q = BinaryCode::from_blocks(db.layout(), &[0, 0]).unwrap();
        let res = db.knn_query(&q, 4, Metric::Vdeh).unwrap();
        let ids: Vec<u64> = res.iter().map(|n| n.row_id).collect();
        assert_eq!(ids, vec![9, 10, 11, 12]);
        assert_eq!(res[0].distance, 0.0);
        assert_eq!(res[2].distance, 0.5);
        assert_eq!(res[3].distance, 1.0);

        let top = db.knn_query(&q, 1, Metric::Vdeh).unwrap();
        assert_eq!(top[0].row_id, 9);
        assert_eq!(db.knn_query(&q, 100, Metric::Hamming).unwrap().len(), 4);
        assert!(db.knn_query(&q, 0, Metric::Vdeh).is_err());
    }

    #[test]
    fn knn_on_empty_db_is_empty() {
        let l = layout(4, 2);
        let db = CodeDatabase::empty(l);
        assert!(db
            .knn_query(&BinaryCode::zeros(l), 3, Metric::Vdeh)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn duplicate_row_ids_rejected() {
        let l = layout(4, 2);
        let c = BinaryCode::zeros(l);
        assert!(CodeDatabase::from_codes_with_ids(l, &[c.clone(), c], vec![1, 1]).is_err());
    }

    fn naive_mismatches(a: &BinaryCode, b: &BinaryCode) -> u32 {
        let w = a.layout().block_bits() as usize;
        (0..a.layout().num_blocks())
            .filter(|t| (0..w).any(|j| a.bit(t * w + j) != b.bit(t * w + j)))
            .count() as u32
    }

    fn arb_pair() -> impl Strategy<Value = (BinaryCode, BinaryCode)> {
        (1u32..=16, 1usize..12).prop_flat_map(|(w, t)| {
            let l = layout(w as usize * t, w);
            let bits = proptest::collection::vec(any::<bool>(), l.code_bits());
            (bits.clone(), bits).prop_map(move |(x, y)| {
                (
                    BinaryCode::from_bits(l, &x).unwrap(),
                    BinaryCode::from_bits(l, &y).unwrap(),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn packed_kernels_match_bit_loops((a, b) in arb_pair()) {
            prop_assert_eq!(mismatched_blocks(&a, &b).unwrap(), naive_mismatches(&a, &b));
            let bitwise = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x != *y).count() as u32;
            prop_assert_eq!(hamming_distance(&a, &b).unwrap(), bitwise);
        }

        #[test]
        fn blocks_bound_hamming((a, b) in arb_pair()) {
            let m = mismatched_blocks(&a, &b).unwrap();
            let h = hamming_distance(&a, &b).unwrap();
            prop_assert!(m <= h);
            prop_assert!(h <= m * a.layout().block_bits());
            prop_assert_eq!(m == 0, a == b);
        }
    }
}
