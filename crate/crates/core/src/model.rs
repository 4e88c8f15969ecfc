//! The encoding interface shared by VDeH and the projection baseline.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::RandomProjectionModel;
use crate::codes::{BinaryCode, CodeDatabase, CodeLayout};
use crate::error::{Error, Result};
use crate::hasher::HasherModel;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Maps points in `R^d` to packed binary codes.
pub trait Encoder<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn layout(&self) -> CodeLayout;

    /// Writes the code of `x` into zeroed `words` of length
    /// `layout().words_per_code()`.
    fn encode_into(&self, x: &[T], words: &mut [u64]) -> Result<()>;

    fn encode(&self, x: &[T]) -> Result<BinaryCode> {
        let layout = self.layout();
        let mut words = vec![0; layout.words_per_code()];
        self.encode_into(x, &mut words)?;
        BinaryCode::from_words(layout, words)
    }

    /// Encodes every row; row `i` gets row id `i`. Rows are processed in
    /// parallel and the result is identical to encoding them in order. On
    /// failure the error of the lowest failing row is returned.
    fn encode_dataset(&self, data: &Matrix<T>) -> Result<CodeDatabase> {
        let layout = self.layout();
        if data.is_empty() {
            return Ok(CodeDatabase::empty(layout));
        }
        if data.cols() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                found: data.cols(),
            });
        }
        let wpc = layout.words_per_code();
        let mut words = vec![0u64; data.rows() * wpc];
        let first_error = words
            .par_chunks_mut(wpc)
            .enumerate()
            .filter_map(|(i, out)| self.encode_into(data.row(i), out).err().map(|e| (i, e)))
            .min_by_key(|(i, _)| *i);
        if let Some((i, e)) = first_error {
            return Err(e.at_row(i));
        }
        CodeDatabase::from_raw(layout, words, (0..data.rows() as u64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    Vdeh,
    /// Sign random projection baseline.
    Lsh,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vdeh" => Ok(ModelKind::Vdeh),
            "lsh" => Ok(ModelKind::Lsh),
            other => Err(Error::param(format!("unknown model kind {other:?}"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Vdeh => "vdeh",
            ModelKind::Lsh => "lsh",
        })
    }
}

/// Either model kind, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<T> {
    Vdeh(HasherModel<T>),
    Lsh(RandomProjectionModel<T>),
}

impl<T: Scalar> AnyModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Vdeh(_) => ModelKind::Vdeh,
            AnyModel::Lsh(_) => ModelKind::Lsh,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            AnyModel::Vdeh(m) => m.seed(),
            AnyModel::Lsh(m) => m.seed(),
        }
    }
}

impl<T: Scalar> Encoder<T> for AnyModel<T> {
    fn dim(&self) -> usize {
        match self {
            AnyModel::Vdeh(m) => m.dim(),
            AnyModel::Lsh(m) => m.dim(),
        }
    }

    fn layout(&self) -> CodeLayout {
        match self {
            AnyModel::Vdeh(m) => m.layout(),
            AnyModel::Lsh(m) => m.layout(),
        }
    }

    fn encode_into(&self, x: &[T], words: &mut [u64]) -> Result<()> {
        match self {
            AnyModel::Vdeh(m) => m.encode_into(x, words),
            AnyModel::Lsh(m) => m.encode_into(x, words),
        }
    }
}

impl<T> From<HasherModel<T>> for AnyModel<T> {
    fn from(m: HasherModel<T>) -> Self {
        AnyModel::Vdeh(m)
    }
}

impl<T> From<RandomProjectionModel<T>> for AnyModel<T> {
    fn from(m: RandomProjectionModel<T>) -> Self {
        AnyModel::Lsh(m)
    }
}
