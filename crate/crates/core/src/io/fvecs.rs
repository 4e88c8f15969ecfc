//! The `.fvecs` vector format: each record is a little-endian `i32`
//! dimension followed by that many little-endian `f32` values.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{check_finite, Matrix};

pub fn read_fvecs(path: &Path) -> Result<Matrix<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_fvecs(&bytes)
}

pub(crate) fn parse_fvecs(bytes: &[u8]) -> Result<Matrix<f32>> {
    if bytes.is_empty() {
        log::warn!("empty fvecs input; dimension undefined");
        return Ok(Matrix::empty());
    }
    let mut dim = None;
    let mut data = Vec::new();
    let mut rows = 0;
    let mut pos = 0;
    while pos < bytes.len() {
        let header = bytes
            .get(pos..pos + 4)
            .ok_or_else(|| Error::Format(format!("truncated record header at byte {pos}")))?;
        let d = i32::from_le_bytes(header.try_into().expect("4 bytes"));
        if d <= 0 {
            return Err(Error::Format(format!(
                "record {rows} declares dimension {d}"
            )));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::Shape { expected, found: d }.at_row(rows));
            }
            _ => {}
        }
        pos += 4;
        let body = bytes
            .get(pos..pos + 4 * d)
            .ok_or_else(|| Error::Format(format!("record {rows} truncated")))?;
        let start = data.len();
        data.extend(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))),
        );
        check_finite(&data[start..]).map_err(|e| e.at_row(rows))?;
        pos += 4 * d;
        rows += 1;
    }
    Matrix::new(rows, dim.unwrap_or(0), data)
}

pub fn write_fvecs(path: &Path, data: &Matrix<f32>) -> Result<()> {
    let mut out = Vec::with_capacity(data.rows() * (4 + 4 * data.cols()));
    let d = i32::try_from(data.cols()).map_err(|_| Error::param("dimension exceeds i32"))?;
    for row in data.iter_rows() {
        out.extend_from_slice(&d.to_le_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(values: &[f32]) -> Vec<u8> {
        let mut out = (values.len() as i32).to_le_bytes().to_vec();
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    #[test]
    fn two_records() {
        let mut bytes = record(&[1.0, 2.0, 3.0]);
        bytes.extend(record(&[4.0, 5.0, 6.0]));
        let m = parse_fvecs(&bytes).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn empty_input() {
        let m = parse_fvecs(&[]).unwrap();
        assert_eq!((m.rows(), m.cols()), (0, 0));
    }

    #[test]
    fn malformed_inputs() {
        let mut ragged = record(&[1.0, 2.0]);
        ragged.extend(record(&[1.0]));
        assert!(matches!(
            parse_fvecs(&ragged),
            Err(Error::Row { row: 1, .. })
        ));

        let mut truncated = record(&[1.0, 2.0]);
        truncated.pop();
        assert!(matches!(parse_fvecs(&truncated), Err(Error::Format(_))));
        assert!(matches!(parse_fvecs(&[1, 0]), Err(Error::Format(_))));

        assert!(matches!(
            parse_fvecs(&record(&[1.0, f32::NAN])),
            Err(Error::Row { row: 0, .. })
        ));
        assert!(parse_fvecs(&0i32.to_le_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn write_then_read_is_bit_exact(
            rows in 1usize..20,
            cols in 1usize..10,
            seed in proptest::collection::vec(-1e30f32..1e30, 200),
        ) {
            let data: Vec<f32> = (0..rows * cols).map(|i| seed[i % seed.len()]).collect();
            let m = Matrix::new(rows, cols, data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.fvecs");
            write_fvecs(&path, &m).unwrap();
            let back = read_fvecs(&path).unwrap();
            let bits = |m: &Matrix<f32>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&m));
            prop_assert_eq!((back.rows(), back.cols()), (rows, cols));
        }
    }
}
