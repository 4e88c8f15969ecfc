//! Sign random projection: the no-learning hyperplane baseline.
//!
//! Bit `l` of a code is `1` when `R_l . x + t_l >= 0`, with every entry of
//! `R_l` drawn from a standard normal and `t_l = 0`. Codes use one-bit
//! blocks, so the VDeH distance on them is normalized Hamming distance.

use rand_distr::{Distribution, StandardNormal};

use crate::codes::CodeLayout;
use crate::error::{Error, Result};
use crate::matrix::{check_point, Matrix};
use crate::model::Encoder;
use crate::rng::{stream_rng, PROJECTION_STREAM};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjectionModel<T> {
    projections: Matrix<T>,
    intercepts: Vec<T>,
    seed: u64,
}

impl<T: Scalar> RandomProjectionModel<T> {
    /// Draws `code_bits` Gaussian rows of length `dim`. Entries are sampled as
    /// `f64` and then converted, so `f32` and `f64` models from one seed agree
    /// up to rounding.
    pub fn build(dim: usize, code_bits: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        CodeLayout::new(code_bits, 1)?;
        let mut rng = stream_rng(seed, PROJECTION_STREAM);
        let data = (0..dim * code_bits)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                T::from_f64(v).expect("normal sample fits any float")
            })
            .collect();
        Ok(Self {
            projections: Matrix::new(code_bits, dim, data)?,
            intercepts: vec![T::zero(); code_bits],
            seed,
        })
    }

    pub fn from_parts(projections: Matrix<T>, intercepts: Vec<T>, seed: u64) -> Result<Self> {
        if projections.cols() == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        CodeLayout::new(projections.rows(), 1)?;
        if intercepts.len() != projections.rows() {
            return Err(Error::Shape {
                expected: projections.rows(),
                found: intercepts.len(),
            });
        }
        projections.check_finite()?;
        crate::matrix::check_finite(&intercepts)?;
        Ok(Self {
            projections,
            intercepts,
            seed,
        })
    }

    pub fn projections(&self) -> &Matrix<T> {
        &self.projections
    }

    pub fn intercepts(&self) -> &[T] {
        &self.intercepts
    }

    pub fn code_bits(&self) -> usize {
        self.projections.rows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl<T: Scalar> Encoder<T> for RandomProjectionModel<T> {
    fn dim(&self) -> usize {
        self.projections.cols()
    }

    fn layout(&self) -> CodeLayout {
        CodeLayout::new(self.code_bits(), 1).expect("validated at construction")
    }

    fn encode_into(&self, x: &[T], words: &mut [u64]) -> Result<()> {
        check_point(x, self.dim())?;
        for (l, (r, &t)) in self
            .projections
            .iter_rows()
            .zip(&self.intercepts)
            .enumerate()
        {
            // sgn(0) = 1
            if dot(r, x) + t >= T::zero() {
                words[l / 64] |= 1 << (l % 64);
            }
        }
        Ok(())
    }
}

pub fn build_lsh<T: Scalar>(
    dim: usize,
    code_bits: usize,
    seed: u64,
) -> Result<RandomProjectionModel<T>> {
    RandomProjectionModel::build(dim, code_bits, seed)
}
