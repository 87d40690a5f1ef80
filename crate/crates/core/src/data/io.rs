//! Feature and label files.
//!
//! Binary features (`DLFX`, all integers little-endian):
//!
//! | offset | size      | field                              |
//! |--------|-----------|------------------------------------|
//! | 0      | 4         | magic `b"DLFX"`                    |
//! | 4      | 2         | version `u16` (= 1)                |
//! | 6      | 8         | rows `n` as `u64`                  |
//! | 14     | 4         | columns `d` as `u32`               |
//! | 18     | `4 * n*d` | `f32` values, row-major            |
//!
//! CSV features are one row per line, comma-separated, no header. Label files
//! are CSV rows of `0`/`1`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{FeatureMatrix, LabelMatrix};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"DLFX";
pub const FEATURE_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    Binary,
}

impl FeatureFormat {
    /// `.csv` and `.txt` files are CSV; everything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                FeatureFormat::Csv
            }
            _ => FeatureFormat::Binary,
        }
    }
}

pub fn load_features(path: impl AsRef<Path>, format: FeatureFormat) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let inner = || -> Result<FeatureMatrix> {
        let file = BufReader::new(File::open(path)?);
        match format {
            FeatureFormat::Binary => read_features_binary(file),
            FeatureFormat::Csv => read_features_csv(file),
        }
    };
    inner().map_err(|e| e.at(path))
}

pub fn save_features(
    path: impl AsRef<Path>,
    features: &FeatureMatrix,
    format: FeatureFormat,
) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        match format {
            FeatureFormat::Binary => write_features_binary(&mut out, features)?,
            FeatureFormat::Csv => write_features_csv(&mut out, features)?,
        }
        out.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.at(path))
}

pub fn read_features_binary(mut r: impl Read) -> Result<FeatureMatrix> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected {FEATURE_MAGIC:?}"
        )));
    }
    let version = read_u16(&mut r)?;
    if version != FEATURE_VERSION {
        return Err(Error::Format(format!("unsupported feature version {version}")));
    }
    let n = read_u64(&mut r)?;
    let d = read_u32(&mut r)? as u64;
    let count = n
        .checked_mul(d)
        .filter(|c| c.checked_mul(4).is_some_and(|b| b <= isize::MAX as u64))
        .ok_or_else(|| Error::Format(format!("dimensions {n}x{d} overflow")))?;
    if n == 0 || d == 0 {
        return Err(Error::Format(format!("empty feature matrix {n}x{d}")));
    }
    let mut buf = vec![0u8; count as usize * 4];
    read_exact(&mut r, &mut buf, "feature values")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after feature values".into()));
    }
    let values: Vec<f64> = buf
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    FeatureMatrix::from_row_major(n as usize, d as usize, &values)
}

/// Writes values as `f32`; entries not representable in single precision are rounded.
pub fn write_features_binary(mut w: impl Write, features: &FeatureMatrix) -> Result<()> {
    let d = u32::try_from(features.cols())
        .map_err(|_| Error::Format("feature dimension exceeds u32".into()))?;
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&FEATURE_VERSION.to_le_bytes())?;
    w.write_all(&(features.rows() as u64).to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    for i in 0..features.rows() {
        for j in 0..features.cols() {
            w.write_all(&(features.get(i, j) as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_features_csv(r: impl BufRead) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = parse_csv(r)?;
    if rows.is_empty() {
        return Err(Error::Format("no feature rows".into()));
    }
    let cols = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Format(format!(
            "row {i} has {} columns, expected {cols}",
            rows[i].len()
        )));
    }
    FeatureMatrix::from_rows(&rows)
}

pub fn write_features_csv(mut w: impl Write, features: &FeatureMatrix) -> Result<()> {
    for i in 0..features.rows() {
        let line: Vec<String> = features.row(i).iter().map(f64::to_string).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelMatrix> {
    let path = path.as_ref();
    let inner = || read_labels_csv(BufReader::new(File::open(path)?));
    inner().map_err(|e| e.at(path))
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabelMatrix) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write_labels_csv(&mut out, labels)?;
        out.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.at(path))
}

pub fn read_labels_csv(r: impl BufRead) -> Result<LabelMatrix> {
    let rows: Vec<Vec<u8>> = parse_csv(r)?;
    if rows.is_empty() {
        return Err(Error::Format("no label rows".into()));
    }
    let labels = rows[0].len();
    if let Some(i) = rows.iter().position(|r| r.len() != labels) {
        return Err(Error::Format(format!(
            "label row {i} has {} columns, expected {labels}",
            rows[i].len()
        )));
    }
    LabelMatrix::from_rows(&rows)
}

pub fn write_labels_csv(mut w: impl Write, labels: &LabelMatrix) -> Result<()> {
    for i in 0..labels.rows() {
        let line: Vec<String> = labels.row(i).iter().map(u8::to_string).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Parses comma-separated rows, skipping blank lines and `#` comments.
fn parse_csv<T: FromStr>(r: impl BufRead) -> Result<Vec<Vec<T>>> {
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                field.trim().parse::<T>().map_err(|_| {
                    Error::Format(format!(
                        "line {}: column {col}: cannot parse {:?}",
                        lineno + 1,
                        field.trim()
                    ))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub(crate) fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated file while reading {what}"))
        } else {
            Error::Io(e)
        }
    })
}

pub(crate) fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact(r, &mut b, "u16 field")?;
    Ok(u16::from_le_bytes(b))
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, "u32 field")?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, "u64 field")?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, "f64 field")?;
    Ok(f64::from_le_bytes(b))
}
