use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::codes::{CodeLayout, Metric};
use crate::error::{Error, Result};
use crate::hasher::bits_for_psi;
use crate::model::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Fvecs,
    Csv,
}

impl DataFormat {
    /// Guesses from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "fvecs" => Some(DataFormat::Fvecs),
            "csv" => Some(DataFormat::Csv),
            _ => None,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fvecs" => Ok(DataFormat::Fvecs),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::param(format!("unknown data format {other:?}"))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::Fvecs => "fvecs",
            DataFormat::Csv => "csv",
        })
    }
}

/// Parameters of one build / evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model_kind: ModelKind,
    /// Anchors per table; ignored by the projection baseline.
    pub psi: usize,
    pub code_bits: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Exact neighbours per query that count as relevant.
    pub ground_truth_k: usize,
    pub query_count: usize,
    /// Rows sampled as the training set / database; `None` uses every row
    /// not drawn as a query.
    pub train_size: Option<usize>,
    pub data_path: Option<PathBuf>,
    pub format: Option<DataFormat>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model_kind: ModelKind::Vdeh,
            psi: 16,
            code_bits: 128,
            seed: 0,
            metric: Metric::Vdeh,
            ground_truth_k: 100,
            query_count: 500,
            train_size: None,
            data_path: None,
            format: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match self.model_kind {
            ModelKind::Vdeh => {
                let w = bits_for_psi(self.psi)?;
                CodeLayout::new(self.code_bits, w)?;
            }
            ModelKind::Lsh => {
                CodeLayout::new(self.code_bits, 1)?;
            }
        }
        if self.ground_truth_k == 0 {
            return Err(Error::param("ground truth k must be at least 1"));
        }
        if self.query_count == 0 {
            return Err(Error::param("query count must be at least 1"));
        }
        if self.train_size == Some(0) {
            return Err(Error::param("train size must be at least 1"));
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    /// One `key = value` line per field.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt_path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or("-".to_string(), |p| p.display().to_string())
        };
        writeln!(f, "model_kind = {}", self.model_kind)?;
        writeln!(f, "psi = {}", self.psi)?;
        writeln!(f, "code_bits = {}", self.code_bits)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "metric = {}", self.metric)?;
        writeln!(f, "ground_truth_k = {}", self.ground_truth_k)?;
        writeln!(f, "query_count = {}", self.query_count)?;
        match self.train_size {
            Some(n) => writeln!(f, "train_size = {n}")?,
            None => writeln!(f, "train_size = all")?,
        }
        writeln!(f, "data = {}", opt_path(&self.data_path))?;
        writeln!(
            f,
            "format = {}",
            self.format.map_or("-".to_string(), |x| x.to_string())
        )?;
        write!(f, "out = {}", opt_path(&self.out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad_psi = RunConfig {
            psi: 12,
            ..Default::default()
        };
        assert!(bad_psi.validate().is_err());
        let bad_bits = RunConfig {
            psi: 8,
            code_bits: 128,
            ..Default::default()
        };
        assert!(bad_bits.validate().is_err());
        let lsh = RunConfig {
            model_kind: ModelKind::Lsh,
            psi: 12,
            code_bits: 7,
            ..Default::default()
        };
        assert!(lsh.validate().is_ok());
        assert!(RunConfig {
            ground_truth_k: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn display_lists_seed() {
        let text = RunConfig {
            seed: 1234,
            ..Default::default()
        }
        .to_string();
        assert!(text.lines().any(|l| l == "seed = 1234"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            DataFormat::from_path(Path::new("a/b.fvecs")),
            Some(DataFormat::Fvecs)
        );
        assert_eq!(
            DataFormat::from_path(Path::new("x.csv")),
            Some(DataFormat::Csv)
        );
        assert_eq!(DataFormat::from_path(Path::new("x.bin")), None);
    }
}
