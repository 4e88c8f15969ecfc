//! Binary containers for models and code databases.
//!
//! Model file (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic "VDEHMODL"
//!      8     2  format version (1)
//!     10     1  model kind: 1 = vdeh, 2 = lsh
//!     11     1  scalar width in bytes: 4 (f32) or 8 (f64)
//!     12     4  d
//!     16     4  psi (0 for lsh)
//!     20     4  w (1 for lsh)
//!     24     4  L
//!     28     4  T (number of tables; L for lsh)
//!     32     8  seed
//!     40     -  vdeh: T tables of psi x d anchors, row-major
//!               lsh:  L x d projections row-major, then L intercepts
//!    end-4   4  CRC-32 of every preceding byte
//! ```
//!
//! Code database file:
//!
//! ```text
//!      0     8  magic "VDEHCODE"
//!      8     2  format version (1)
//!     10     2  reserved, zero
//!     12     4  L
//!     16     4  w
//!     20     8  N
//!     28     -  N codes of ceil(L/64) u64 words each
//!      -     -  N u64 row ids
//!    end-4   4  CRC-32 of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use crate::baseline::RandomProjectionModel;
use crate::codes::{CodeDatabase, CodeLayout};
use crate::error::{Error, Result};
use crate::hasher::{bits_for_psi, AnchorTable, HasherModel};
use crate::matrix::Matrix;
use crate::model::{AnyModel, Encoder};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 8] = b"VDEHMODL";
pub const CODES_MAGIC: &[u8; 8] = b"VDEHCODE";
pub const FORMAT_VERSION: u16 = 1;

const MODEL_HEADER: usize = 40;
const CODES_HEADER: usize = 28;

const KIND_VDEH: u8 = 1;
const KIND_LSH: u8 = 2;

fn u32_field(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::param(format!("{what} {v} does not fit the file format")))
}

pub fn encode_model<T: Scalar>(model: &AnyModel<T>) -> Result<Vec<u8>> {
    let layout = model.layout();
    let d = model.dim();
    let (kind, psi, tables) = match model {
        AnyModel::Vdeh(m) => (KIND_VDEH, m.psi(), m.num_tables()),
        AnyModel::Lsh(m) => (KIND_LSH, 0, m.code_bits()),
    };
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind);
    out.push(T::WIDTH);
    out.extend_from_slice(&u32_field(d, "dimension")?.to_le_bytes());
    out.extend_from_slice(&u32_field(psi, "psi")?.to_le_bytes());
    out.extend_from_slice(&layout.block_bits().to_le_bytes());
    out.extend_from_slice(&u32_field(layout.code_bits(), "code length")?.to_le_bytes());
    out.extend_from_slice(&u32_field(tables, "table count")?.to_le_bytes());
    out.extend_from_slice(&model.seed().to_le_bytes());
    match model {
        AnyModel::Vdeh(m) => {
            for t in m.tables() {
                for &v in t.anchors().as_slice() {
                    v.write_le(&mut out);
                }
            }
        }
        AnyModel::Lsh(m) => {
            for &v in m.projections().as_slice().iter().chain(m.intercepts()) {
                v.write_le(&mut out);
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Cursor over a byte slice with truncation errors.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let w = T::WIDTH as usize;
        let len = n
            .checked_mul(w)
            .ok_or_else(|| Error::Format("size overflow".into()))?;
        Ok(self.take(len)?.chunks_exact(w).map(T::read_le).collect())
    }
}

/// Checks magic, version and trailing checksum; returns the body reader
/// positioned after the version field.
fn open<'a>(
    bytes: &'a [u8],
    magic: &[u8; 8],
    what: &'static str,
    header: usize,
) -> Result<Reader<'a>> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        return Err(Error::BadMagic { expected: what });
    }
    if bytes.len() < header + 4 {
        return Err(Error::Format(format!("{what} file truncated")));
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(Reader {
        bytes: body,
        pos: 10,
    })
}

fn expect_consumed(r: &Reader<'_>) -> Result<()> {
    if r.pos != r.bytes.len() {
        return Err(Error::Format(format!(
            "{} unexpected trailing bytes",
            r.bytes.len() - r.pos
        )));
    }
    Ok(())
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<AnyModel<T>> {
    let mut r = open(bytes, MODEL_MAGIC, "model", MODEL_HEADER)?;
    let head = r.take(2)?;
    let (kind, width) = (head[0], head[1]);
    if width != T::WIDTH {
        return Err(Error::Format(format!(
            "model stores {width}-byte scalars, reader expects {}",
            T::WIDTH
        )));
    }
    let d = r.u32()? as usize;
    let psi = r.u32()? as usize;
    let w = r.u32()?;
    let code_bits = r.u32()? as usize;
    let tables = r.u32()? as usize;
    let seed = r.u64()?;
    let invalid = |e: Error| Error::Format(format!("invalid model: {e}"));

    let model = match kind {
        KIND_VDEH => {
            if bits_for_psi(psi).map_err(invalid)? != w || tables * w as usize != code_bits {
                return Err(Error::Format("inconsistent vdeh header".into()));
            }
            let mut ts = Vec::with_capacity(tables);
            for t in 0..tables {
                let values = r.scalars::<T>(psi * d)?;
                let anchors = Matrix::new(psi, d, values).map_err(invalid)?;
                ts.push(AnchorTable::new(anchors, t).map_err(invalid)?);
            }
            AnyModel::Vdeh(HasherModel::from_tables(ts, seed).map_err(invalid)?)
        }
        KIND_LSH => {
            if psi != 0 || w != 1 || tables != code_bits {
                return Err(Error::Format("inconsistent lsh header".into()));
            }
            let proj =
                Matrix::new(code_bits, d, r.scalars::<T>(code_bits * d)?).map_err(invalid)?;
            let intercepts = r.scalars::<T>(code_bits)?;
            AnyModel::Lsh(
                RandomProjectionModel::from_parts(proj, intercepts, seed).map_err(invalid)?,
            )
        }
        other => return Err(Error::Format(format!("unknown model kind {other}"))),
    };
    expect_consumed(&r)?;
    Ok(model)
}

pub fn save_model<T: Scalar>(path: &Path, model: &AnyModel<T>) -> Result<()> {
    fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<AnyModel<T>> {
    decode_model(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn encode_codes(db: &CodeDatabase) -> Result<Vec<u8>> {
    let layout = db.layout();
    let mut out = Vec::with_capacity(CODES_HEADER + 8 * (db.raw_words().len() + db.len()) + 4);
    out.extend_from_slice(CODES_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&u32_field(layout.code_bits(), "code length")?.to_le_bytes());
    out.extend_from_slice(&layout.block_bits().to_le_bytes());
    out.extend_from_slice(&(db.len() as u64).to_le_bytes());
    for w in db.raw_words().iter().chain(db.row_ids()) {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_codes(bytes: &[u8]) -> Result<CodeDatabase> {
    let mut r = open(bytes, CODES_MAGIC, "code database", CODES_HEADER)?;
    if r.u16()? != 0 {
        return Err(Error::Format("reserved header field is nonzero".into()));
    }
    let code_bits = r.u32()? as usize;
    let w = r.u32()?;
    let layout =
        CodeLayout::new(code_bits, w).map_err(|e| Error::Format(format!("invalid layout: {e}")))?;
    let n = usize::try_from(r.u64()?).map_err(|_| Error::Format("row count overflow".into()))?;
    let words_len = n
        .checked_mul(layout.words_per_code())
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    let mut words = Vec::with_capacity(words_len.min(bytes.len() / 8));
    for _ in 0..words_len {
        words.push(r.u64()?);
    }
    let mut ids = Vec::with_capacity(n.min(bytes.len() / 8));
    for _ in 0..n {
        ids.push(r.u64()?);
    }
    expect_consumed(&r)?;
    CodeDatabase::from_raw(layout, words, ids)
        .map_err(|e| Error::Format(format!("invalid codes: {e}")))
}

pub fn save_codes(path: &Path, db: &CodeDatabase) -> Result<()> {
    fs::write(path, encode_codes(db)?).map_err(|e| Error::io(path, e))
}

pub fn load_codes(path: &Path) -> Result<CodeDatabase> {
    decode_codes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
