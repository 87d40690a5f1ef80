//! Cross-modal similarity `S` in `{0, 1}^(n x n)`.
//!
//! Training only ever asks for single entries, so a source is anything that
//! can answer `similar(i, j)`. Label-backed sources answer from the label
//! bitsets and never allocate the `n x n` matrix.

use crate::data::LabelMatrix;
use crate::error::{Error, Result};

/// Default row count up to which label similarity is materialized densely.
pub const DENSE_THRESHOLD: usize = 10_000;

pub trait SimilaritySource: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn similar(&self, i: usize, j: usize) -> bool;

    /// `S_{i*}` as `{0, 1}` values.
    fn row(&self, i: usize) -> Vec<u8> {
        (0..self.cols()).map(|j| self.similar(i, j) as u8).collect()
    }

    /// `S_{*j}` as `{0, 1}` values.
    fn column(&self, j: usize) -> Vec<u8> {
        (0..self.rows()).map(|i| self.similar(i, j) as u8).collect()
    }

    /// Row `i` as packed bits (bit `j` of word `j / 64`), when stored that way.
    fn row_bits(&self, _i: usize) -> Option<&[u64]> {
        None
    }
}

impl<S: SimilaritySource + ?Sized> SimilaritySource for &S {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    #[inline]
    fn similar(&self, i: usize, j: usize) -> bool {
        (**self).similar(i, j)
    }
    fn row_bits(&self, i: usize) -> Option<&[u64]> {
        (**self).row_bits(i)
    }
}

/// View of `S^T`.
#[derive(Clone, Copy, Debug)]
pub struct Transposed<S>(pub S);

impl<S: SimilaritySource> SimilaritySource for Transposed<S> {
    fn rows(&self) -> usize {
        self.0.cols()
    }
    fn cols(&self) -> usize {
        self.0.rows()
    }
    #[inline]
    fn similar(&self, i: usize, j: usize) -> bool {
        self.0.similar(j, i)
    }
}

/// Bit-packed dense similarity, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseSimilarity {
    rows: usize,
    cols: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl DenseSimilarity {
    /// Dense copy of `S^T`.
    pub fn transpose_of<S: SimilaritySource + ?Sized>(s: &S) -> Self {
        DenseSimilarity::from_fn(s.cols(), s.rows(), |i, j| s.similar(j, i))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let stride = cols.div_ceil(64);
        let mut bits = vec![0u64; rows * stride];
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    bits[i * stride + j / 64] |= 1 << (j % 64);
                }
            }
        }
        DenseSimilarity {
            rows,
            cols,
            stride,
            bits,
        }
    }

    /// Builds from `{0, 1}` rows.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::contract("similarity rows have differing lengths"));
            }
            if let Some(j) = r.iter().position(|&v| v > 1) {
                return Err(Error::contract(format!(
                    "similarity entry ({i}, {j}) = {} is not 0 or 1",
                    r[j]
                )));
            }
        }
        Ok(DenseSimilarity::from_fn(rows.len(), cols, |i, j| rows[i][j] == 1))
    }
}

impl SimilaritySource for DenseSimilarity {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    fn similar(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.stride + j / 64] >> (j % 64)) & 1 == 1
    }
    fn row_bits(&self, i: usize) -> Option<&[u64]> {
        Some(&self.bits[i * self.stride..(i + 1) * self.stride])
    }
}

/// `S_ij = 1` exactly when item `i` of `left` and item `j` of `right` share a label.
#[derive(Clone, Debug)]
pub struct LabelSimilarity {
    left: LabelMatrix,
    right: LabelMatrix,
}

impl LabelSimilarity {
    pub fn new(left: LabelMatrix, right: LabelMatrix) -> Result<Self> {
        if left.labels() != right.labels() {
            return Err(Error::contract(format!(
                "label count mismatch: {} vs {}",
                left.labels(),
                right.labels()
            )));
        }
        Ok(LabelSimilarity { left, right })
    }

    pub fn left(&self) -> &LabelMatrix {
        &self.left
    }

    pub fn right(&self) -> &LabelMatrix {
        &self.right
    }

    pub fn to_dense(&self) -> DenseSimilarity {
        DenseSimilarity::from_fn(self.left.rows(), self.right.rows(), |i, j| self.similar(i, j))
    }
}

impl SimilaritySource for LabelSimilarity {
    fn rows(&self) -> usize {
        self.left.rows()
    }
    fn cols(&self) -> usize {
        self.right.rows()
    }
    #[inline]
    fn similar(&self, i: usize, j: usize) -> bool {
        self.left.shares_label(i, &self.right, j)
    }
}

/// Either storage form.
#[derive(Clone, Debug)]
pub enum Similarity {
    Dense(DenseSimilarity),
    Labels(LabelSimilarity),
}

impl Similarity {
    pub fn is_dense(&self) -> bool {
        matches!(self, Similarity::Dense(_))
    }
}

impl SimilaritySource for Similarity {
    fn rows(&self) -> usize {
        match self {
            Similarity::Dense(s) => s.rows(),
            Similarity::Labels(s) => s.rows(),
        }
    }
    fn cols(&self) -> usize {
        match self {
            Similarity::Dense(s) => s.cols(),
            Similarity::Labels(s) => s.cols(),
        }
    }
    #[inline]
    fn similar(&self, i: usize, j: usize) -> bool {
        match self {
            Similarity::Dense(s) => s.similar(i, j),
            Similarity::Labels(s) => s.similar(i, j),
        }
    }
    fn row_bits(&self, i: usize) -> Option<&[u64]> {
        match self {
            Similarity::Dense(s) => s.row_bits(i),
            Similarity::Labels(_) => None,
        }
    }
}

/// Label-derived similarity, dense when both sides have at most
/// [`DENSE_THRESHOLD`] rows.
pub fn similarity_from_labels(a: &LabelMatrix, b: &LabelMatrix) -> Result<Similarity> {
    similarity_from_labels_with_threshold(a, b, DENSE_THRESHOLD)
}

pub fn similarity_from_labels_with_threshold(
    a: &LabelMatrix,
    b: &LabelMatrix,
    dense_threshold: usize,
) -> Result<Similarity> {
    let labels = LabelSimilarity::new(a.clone(), b.clone())?;
    if a.rows().max(b.rows()) <= dense_threshold {
        Ok(Similarity::Dense(labels.to_dense()))
    } else {
        Ok(Similarity::Labels(labels))
    }
}
