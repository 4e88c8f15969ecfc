//! Seeded synthetic datasets.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream_rng, SYNTH_STREAM};
use crate::scalar::Scalar;

/// `n` points drawn uniformly from the box `[low, high)^d`.
pub fn uniform<T: Scalar>(n: usize, d: usize, low: f64, high: f64, seed: u64) -> Result<Matrix<T>> {
    check_shape(n, d)?;
    if !low.is_finite() || !high.is_finite() || low >= high {
        return Err(Error::param(format!(
            "invalid uniform bounds [{low}, {high})"
        )));
    }
    let mut rng = stream_rng(seed, SYNTH_STREAM);
    let data = (0..n * d)
        .map(|_| cast(rng.random_range(low..high)))
        .collect();
    Matrix::new(n, d, data)
}

/// Isotropic Gaussian mixture with equally weighted components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMixture {
    pub clusters: usize,
    /// Per-coordinate standard deviation around each center.
    pub spread: f64,
    /// Centers are drawn uniformly from `[-center_range, center_range)^d`.
    pub center_range: f64,
}

impl Default for GaussianMixture {
    fn default() -> Self {
        Self {
            clusters: 10,
            spread: 1.0,
            center_range: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureSample<T> {
    pub data: Matrix<T>,
    pub centers: Matrix<f64>,
    /// Component of each row.
    pub labels: Vec<usize>,
}

impl GaussianMixture {
    pub fn sample<T: Scalar>(&self, n: usize, d: usize, seed: u64) -> Result<MixtureSample<T>> {
        check_shape(n, d)?;
        if self.clusters == 0 {
            return Err(Error::param("mixture needs at least one cluster"));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::param(format!("invalid spread {}", self.spread)));
        }
        if !(self.center_range > 0.0 && self.center_range.is_finite()) {
            return Err(Error::param(format!(
                "invalid center range {}",
                self.center_range
            )));
        }
        let mut rng = stream_rng(seed, SYNTH_STREAM);
        let r = self.center_range;
        let centers: Vec<f64> = (0..self.clusters * d)
            .map(|_| rng.random_range(-r..r))
            .collect();
        let centers = Matrix::new(self.clusters, d, centers)?;
        let noise = Normal::new(0.0, self.spread).expect("spread validated");

        let mut labels = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let c = rng.random_range(0..self.clusters);
            labels.push(c);
            data.extend(
                centers
                    .row(c)
                    .iter()
                    .map(|mu| cast::<T>(mu + noise.sample(&mut rng))),
            );
        }
        Ok(MixtureSample {
            data: Matrix::new(n, d, data)?,
            centers,
            labels,
        })
    }
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::param(format!(
            "n and d must be at least 1, got n={n} d={d}"
        )));
    }
    Ok(())
}

fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 converts")
}
