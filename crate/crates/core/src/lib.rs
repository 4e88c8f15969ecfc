//! Voronoi diagram encoded hashing (VDeH).
//!
//! A no-learning, data-dependent binary hashing scheme. Each of `T` tables
//! samples `psi = 2^w` anchors from the data; a point's code concatenates,
//! for every table, the `w`-bit index of its nearest anchor. Codes are
//! compared block-wise: the fraction of tables in which two points land in
//! different cells.
//!
//! ```
//! use vdeh::{build_hasher, synth, vdeh_distance, Encoder, Matrix32};
//!
//! let data: Matrix32 = synth::uniform(1_000, 8, 0.0, 1.0, 7).unwrap();
//! let model = build_hasher(&data, 16, 256, 42).unwrap();
//! let a = model.encode(data.row(0)).unwrap();
//! let b = model.encode(data.row(1)).unwrap();
//! let d = vdeh_distance(&a, &b).unwrap();
//! assert!((0.0..=1.0).contains(&d));
//! ```
//!
//! Numeric containers are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below name the common instantiations.

pub mod baseline;
pub mod codes;
pub mod error;
pub mod eval;
pub mod hasher;
pub mod io;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use baseline::{build_lsh, RandomProjectionModel};
pub use codes::{
    hamming_distance, similarity_estimate, vdeh_distance, BinaryCode, CodeDatabase, CodeLayout,
    Metric, Neighbor,
};
pub use error::{Error, Result};
pub use hasher::{
    bits_for_psi, build_hasher, decode_cell, encode_cell, encode_point, AnchorTable,
    CellAssignment, HasherModel,
};
pub use matrix::Matrix;
pub use model::{AnyModel, Encoder, ModelKind};
pub use scalar::Scalar;

pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type HasherModel32 = HasherModel<f32>;
pub type HasherModel64 = HasherModel<f64>;
pub type ProjectionModel32 = RandomProjectionModel<f32>;
pub type ProjectionModel64 = RandomProjectionModel<f64>;
pub type AnyModel32 = AnyModel<f32>;
pub type AnyModel64 = AnyModel<f64>;
