//! Binary code matrices over `{-1, +1}`.
//!
//! Codes are stored bit-packed: each row occupies `ceil(bits / 64)` words,
//! bit `k` of a row is set exactly when entry `(row, k)` is `+1`, bits are
//! LSB-first within a word and padding bits past `bits` are always zero.
//! Inner products between rows therefore reduce to a popcount:
//! `<u, v> = bits - 2 * hamming(u, v)`.

use std::fmt;

use crate::error::{Error, Result};

/// Number of 64-bit words needed for `bits` code bits.
pub fn words_per_row(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// An `n x c` matrix of sign entries.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CodeMatrix {
    rows: usize,
    bits: usize,
    stride: usize,
    words: Vec<u64>,
}

impl CodeMatrix {
    /// A matrix with every entry equal to `value`.
    pub fn filled(rows: usize, bits: usize, value: i8) -> Result<Self> {
        check_shape(rows, bits)?;
        check_sign(value)?;
        let mut m = CodeMatrix {
            rows,
            bits,
            stride: words_per_row(bits),
            words: vec![0; rows * words_per_row(bits)],
        };
        if value == 1 {
            for i in 0..rows {
                for k in 0..bits {
                    m.set(i, k, 1);
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from row-major sign entries.
    pub fn from_signs(rows: usize, bits: usize, signs: &[i8]) -> Result<Self> {
        check_shape(rows, bits)?;
        if signs.len() != rows * bits {
            return Err(Error::contract(format!(
                "expected {} sign entries for a {rows}x{bits} code matrix, got {}",
                rows * bits,
                signs.len()
            )));
        }
        let mut m = CodeMatrix::filled(rows, bits, -1)?;
        for (idx, &s) in signs.iter().enumerate() {
            check_sign(s)?;
            if s == 1 {
                m.set(idx / bits, idx % bits, 1);
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let bits = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != bits) {
            return Err(Error::contract("code rows have differing lengths"));
        }
        let flat: Vec<i8> = rows.iter().flatten().copied().collect();
        CodeMatrix::from_signs(rows.len(), bits, &flat)
    }

    /// Builds a matrix directly from packed row words. Padding bits must be zero.
    pub fn from_words(rows: usize, bits: usize, words: Vec<u64>) -> Result<Self> {
        check_shape(rows, bits)?;
        let stride = words_per_row(bits);
        if words.len() != rows * stride {
            return Err(Error::contract(format!(
                "expected {} words for {rows} rows of {bits} bits, got {}",
                rows * stride,
                words.len()
            )));
        }
        let pad = padding_mask(bits);
        if pad != 0 && words.chunks(stride).any(|row| row[stride - 1] & pad != 0) {
            return Err(Error::Format("nonzero padding bits in packed codes".into()));
        }
        Ok(CodeMatrix {
            rows,
            bits,
            stride,
            words,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Words per packed row.
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn get(&self, row: usize, bit: usize) -> i8 {
        debug_assert!(row < self.rows && bit < self.bits);
        let w = self.words[row * self.stride + bit / 64];
        if (w >> (bit % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, bit: usize, value: i8) {
        debug_assert!(row < self.rows && bit < self.bits);
        debug_assert!(value == 1 || value == -1);
        let w = &mut self.words[row * self.stride + bit / 64];
        let mask = 1u64 << (bit % 64);
        if value == 1 {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row(&self, row: usize) -> Vec<i8> {
        (0..self.bits).map(|k| self.get(row, k)).collect()
    }

    #[inline]
    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn column(&self, bit: usize) -> Vec<i8> {
        (0..self.rows).map(|i| self.get(i, bit)).collect()
    }

    pub fn set_column(&mut self, bit: usize, column: &[i8]) -> Result<()> {
        if bit >= self.bits {
            return Err(Error::contract(format!(
                "bit index {bit} out of range for {} bits",
                self.bits
            )));
        }
        if column.len() != self.rows {
            return Err(Error::contract(format!(
                "column has {} entries, matrix has {} rows",
                column.len(),
                self.rows
            )));
        }
        for (i, &s) in column.iter().enumerate() {
            check_sign(s)?;
            self.set(i, bit, s);
        }
        Ok(())
    }

    /// Row-major sign entries.
    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.rows).flat_map(|i| self.row(i)).collect()
    }

    /// Hamming distance between row `i` of `self` and row `j` of `other`.
    #[inline]
    pub fn hamming_to(&self, i: usize, other: &CodeMatrix, j: usize) -> u32 {
        self.row_words(i)
            .iter()
            .zip(other.row_words(j))
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Inner product of sign rows, `bits - 2 * hamming`.
    #[inline]
    pub fn inner(&self, i: usize, other: &CodeMatrix, j: usize) -> i64 {
        self.bits as i64 - 2 * self.hamming_to(i, other, j) as i64
    }

    /// A new matrix holding the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::contract("cannot select zero rows"));
        }
        let mut words = Vec::with_capacity(indices.len() * self.stride);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::contract(format!("row {i} out of range")));
            }
            words.extend_from_slice(self.row_words(i));
        }
        CodeMatrix::from_words(indices.len(), self.bits, words)
    }
}

impl fmt::Debug for CodeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CodeMatrix({}x{})", self.rows, self.bits)?;
        for i in 0..self.rows.min(16) {
            let row: String = self
                .row(i)
                .into_iter()
                .map(|s| if s == 1 { '+' } else { '-' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        if self.rows > 16 {
            writeln!(f, "  ...")?;
        }
        Ok(())
    }
}

/// Bits of the final word that lie past `bits`.
pub(crate) fn padding_mask(bits: usize) -> u64 {
    match bits % 64 {
        0 => 0,
        r => !0u64 << r,
    }
}

fn check_shape(rows: usize, bits: usize) -> Result<()> {
    if rows == 0 || bits == 0 {
        return Err(Error::contract(format!(
            "code matrix needs at least one row and one bit, got {rows}x{bits}"
        )));
    }
    Ok(())
}

fn check_sign(s: i8) -> Result<()> {
    if s == 1 || s == -1 {
        Ok(())
    } else {
        Err(Error::contract(format!("code entry {s} is not +1 or -1")))
    }
}
