//! Dataset ingestion, model and code persistence, run configuration.

mod config;
mod container;
mod delimited;
mod fvecs;

pub use config::{DataFormat, RunConfig};
pub use container::{
    decode_codes, decode_model, encode_codes, encode_model, load_codes, load_model, save_codes,
    save_model, CODES_MAGIC, FORMAT_VERSION, MODEL_MAGIC,
};
pub use delimited::{read_csv, write_csv};
pub use fvecs::{read_fvecs, write_fvecs};

use std::path::Path;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Reads a dataset in the given format, converting to `T`.
pub fn read_dataset<T: Scalar>(
    path: &Path,
    format: DataFormat,
    has_header: bool,
) -> Result<Matrix<T>> {
    match format {
        DataFormat::Fvecs => Ok(read_fvecs(path)?.cast()),
        DataFormat::Csv => read_csv(path, has_header),
    }
}

pub fn write_dataset<T: Scalar>(path: &Path, format: DataFormat, data: &Matrix<T>) -> Result<()> {
    match format {
        DataFormat::Fvecs => write_fvecs(path, &data.cast()),
        DataFormat::Csv => write_csv(path, data),
    }
}
