//! Dense numeric CSV with `.` as the decimal separator.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{check_finite, Matrix};
use crate::scalar::Scalar;

pub fn read_csv<T: Scalar>(path: &Path, has_header: bool) -> Result<Matrix<T>> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(
            File::open(path).map_err(|e| Error::io(path, e))?,
        ));
    parse(reader)
}

fn parse<T: Scalar, R: std::io::Read>(mut reader: csv::Reader<R>) -> Result<Matrix<T>> {
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        match cols {
            None => cols = Some(record.len()),
            Some(expected) if expected != record.len() => {
                return Err(Error::Shape {
                    expected,
                    found: record.len(),
                }
                .at_row(rows));
            }
            _ => {}
        }
        let start = data.len();
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Format(format!("column {j}: {cell:?} is not a number")).at_row(rows)
            })?;
            data.push(T::from_f64(v).unwrap_or_else(T::nan));
        }
        check_finite(&data[start..]).map_err(|e| e.at_row(rows))?;
        rows += 1;
    }
    Matrix::new(rows, cols.unwrap_or(0), data)
}

/// Writes shortest round-trip decimal representations, no header.
pub fn write_csv<T: Scalar>(path: &Path, data: &Matrix<T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    for row in data.iter_rows() {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
