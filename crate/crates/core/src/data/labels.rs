use crate::codes::words_per_row;
use crate::error::{Error, Result};

/// Multi-hot label vectors, one bit per label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMatrix {
    rows: usize,
    labels: usize,
    stride: usize,
    words: Vec<u64>,
}

impl LabelMatrix {
    /// Builds from row-major `{0, 1}` entries.
    pub fn from_dense(rows: usize, labels: usize, values: &[u8]) -> Result<Self> {
        if labels == 0 {
            return Err(Error::contract("label matrix needs at least one label column"));
        }
        if values.len() != rows * labels {
            return Err(Error::contract(format!(
                "expected {} label entries for {rows}x{labels}, got {}",
                rows * labels,
                values.len()
            )));
        }
        let stride = words_per_row(labels);
        let mut words = vec![0u64; rows * stride];
        for (idx, &v) in values.iter().enumerate() {
            let (i, l) = (idx / labels, idx % labels);
            match v {
                0 => {}
                1 => words[i * stride + l / 64] |= 1 << (l % 64),
                other => {
                    return Err(Error::Format(format!(
                        "label entry {other} at row {i}, column {l} is not 0 or 1"
                    )))
                }
            }
        }
        Ok(LabelMatrix {
            rows,
            labels,
            stride,
            words,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let labels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != labels) {
            return Err(Error::contract("label rows have differing lengths"));
        }
        let flat: Vec<u8> = rows.iter().flatten().copied().collect();
        LabelMatrix::from_dense(rows.len(), labels, &flat)
    }

    /// One-hot rows from class indices.
    pub fn one_hot(classes: &[usize], labels: usize) -> Result<Self> {
        let mut dense = vec![0u8; classes.len() * labels];
        for (i, &c) in classes.iter().enumerate() {
            if c >= labels {
                return Err(Error::contract(format!(
                    "class {c} out of range for {labels} labels"
                )));
            }
            dense[i * labels + c] = 1;
        }
        LabelMatrix::from_dense(classes.len(), labels, &dense)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn get(&self, row: usize, label: usize) -> bool {
        (self.words[row * self.stride + label / 64] >> (label % 64)) & 1 == 1
    }

    pub fn row(&self, row: usize) -> Vec<u8> {
        (0..self.labels).map(|l| self.get(row, l) as u8).collect()
    }

    #[inline]
    pub(crate) fn row_words(&self, row: usize) -> &[u64] {
        &self.words[row * self.stride..(row + 1) * self.stride]
    }

    /// True when row `i` of `self` and row `j` of `other` share a label.
    #[inline]
    pub fn shares_label(&self, i: usize, other: &LabelMatrix, j: usize) -> bool {
        if self.stride == 1 {
            return self.words[i] & other.words[j] != 0;
        }
        self.row_words(i)
            .iter()
            .zip(other.row_words(j))
            .any(|(a, b)| a & b != 0)
    }

    /// Rows carrying no label at all.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&i| self.row_words(i).iter().all(|&w| w == 0))
            .collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut words = Vec::with_capacity(indices.len() * self.stride);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::contract(format!("row {i} out of range")));
            }
            words.extend_from_slice(self.row_words(i));
        }
        Ok(LabelMatrix {
            rows: indices.len(),
            labels: self.labels,
            stride: self.stride,
            words,
        })
    }
}
