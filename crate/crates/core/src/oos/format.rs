//! Hash model files.
//!
//! All integers little-endian, all reals `f64` little-endian.
//!
//! ```text
//! magic      4 bytes  b"DLFM"
//! version    u16      1
//! modality   u8       0 = x (image side), 1 = y (text side)
//! kind       u8       0 = linear, 1 = kernel
//! d          u32      feature dimension
//! c          u32      code length
//! -- linear --
//! weights    d*c      row-major d x c
//! center     d
//! -- kernel --
//! a          u32      anchor count
//! weights    (a+1)*c  row-major; row a holds the intercepts
//! center     d
//! anchors    a*d      row-major, centered coordinates
//! bandwidth  1
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{HashFunction, HashModel, KernelHashModel, LinearHashModel, Modality};
use crate::data::io::{read_exact, read_f64, read_u16, read_u32};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"DLFM";
pub const MODEL_VERSION: u16 = 1;

const KIND_LINEAR: u8 = 0;
const KIND_KERNEL: u8 = 1;
/// Upper bound on any single matrix read from a model file, in entries.
const MAX_ENTRIES: u64 = 1 << 32;

pub fn write_model(
    mut w: impl Write,
    modality: Modality,
    model: &HashModel,
) -> Result<()> {
    let dim = u32_field(model.dim(), "dimension")?;
    let bits = u32_field(model.bits(), "code length")?;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&[modality.tag()])?;
    match model {
        HashModel::Linear(m) => {
            w.write_all(&[KIND_LINEAR])?;
            w.write_all(&dim.to_le_bytes())?;
            w.write_all(&bits.to_le_bytes())?;
            write_matrix(&mut w, m.weights())?;
            write_reals(&mut w, m.center())?;
        }
        HashModel::Kernel(m) => {
            w.write_all(&[KIND_KERNEL])?;
            w.write_all(&dim.to_le_bytes())?;
            w.write_all(&bits.to_le_bytes())?;
            w.write_all(&u32_field(m.anchors().nrows(), "anchor count")?.to_le_bytes())?;
            write_matrix(&mut w, m.weights())?;
            write_reals(&mut w, m.center())?;
            write_matrix(&mut w, m.anchors())?;
            write_reals(&mut w, &[m.bandwidth()])?;
        }
    }
    Ok(())
}

pub fn read_model(mut r: impl Read) -> Result<(Modality, HashModel)> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected {MODEL_MAGIC:?}")));
    }
    let version = read_u16(&mut r)?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let mut tags = [0u8; 2];
    read_exact(&mut r, &mut tags, "modality and kind")?;
    let modality = Modality::from_tag(tags[0])?;
    let dim = read_u32(&mut r)? as usize;
    let bits = read_u32(&mut r)? as usize;
    if dim == 0 || bits == 0 {
        return Err(Error::Format(format!("empty model shape {dim}x{bits}")));
    }
    let model = match tags[1] {
        KIND_LINEAR => {
            let weights = read_matrix(&mut r, dim, bits)?;
            let center = read_reals(&mut r, dim)?;
            HashModel::Linear(LinearHashModel::new(weights, center).map_err(as_format)?)
        }
        KIND_KERNEL => {
            let a = read_u32(&mut r)? as usize;
            let weights = read_matrix(&mut r, a + 1, bits)?;
            let center = read_reals(&mut r, dim)?;
            let anchors = read_matrix(&mut r, a, dim)?;
            let bandwidth = read_f64(&mut r)?;
            HashModel::Kernel(
                KernelHashModel::new(anchors, bandwidth, weights, center).map_err(as_format)?,
            )
        }
        other => return Err(Error::Format(format!("unknown model kind {other}"))),
    };
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    Ok((modality, model))
}

pub fn save_model(path: impl AsRef<Path>, modality: Modality, model: &HashModel) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write_model(&mut out, modality, model)?;
        out.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.at(path))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Modality, HashModel)> {
    let path = path.as_ref();
    let inner = || read_model(BufReader::new(File::open(path)?));
    inner().map_err(|e| e.at(path))
}

fn as_format(e: Error) -> Error {
    match e {
        Error::Contract(m) | Error::Numerical(m) => Error::Format(m),
        other => other,
    }
}

fn u32_field(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")))
}

fn write_reals(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_matrix(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        for v in row.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_reals(r: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    if len as u64 > MAX_ENTRIES {
        return Err(Error::Format(format!("{len} entries exceed the format limit")));
    }
    let mut buf = vec![0u8; len * 8];
    read_exact(r, &mut buf, "model parameters")?;
    Ok(buf
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect())
}

fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format(format!("matrix {rows}x{cols} overflows")))?;
    let values = read_reals(r, len)?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}
