use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n x d` real feature matrix for one modality.
///
/// `center` is the total offset already subtracted from the rows; it is all
/// zeros for raw data and is what out-of-sample models subtract from queries.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
    centered: bool,
    center: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds from row-major values, rejecting non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::contract(format!(
                "feature matrix needs positive shape, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::contract(format!(
                "expected {} feature values for {rows}x{cols}, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(FeatureMatrix {
            data: DMatrix::from_row_slice(rows, cols, values),
            centered: false,
            center: vec![0.0; cols],
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::contract("feature rows have differing lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        FeatureMatrix::from_row_major(rows.len(), cols, &flat)
    }

    pub(crate) fn from_parts(data: DMatrix<f64>, centered: bool, center: Vec<f64>) -> Self {
        debug_assert_eq!(center.len(), data.ncols());
        FeatureMatrix {
            data,
            centered,
            center,
        }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.data.row(row).iter().copied().collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        (0..self.rows()).flat_map(|i| self.row(i)).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Offset subtracted from the original rows.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Keeps the given rows, preserving the centering metadata.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::contract("cannot select zero feature rows"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.rows()) {
            return Err(Error::contract(format!("row {bad} out of range")));
        }
        Ok(FeatureMatrix {
            data: self.data.select_rows(indices.iter()),
            centered: self.centered,
            center: self.center.clone(),
        })
    }
}

/// Subtracts column means. The returned matrix records the cumulative offset,
/// so centering twice leaves both the data and the stored center unchanged
/// (up to round-off).
pub fn center(features: &FeatureMatrix) -> FeatureMatrix {
    let n = features.rows() as f64;
    let means: Vec<f64> = features
        .data
        .column_iter()
        .map(|c| c.iter().sum::<f64>() / n)
        .collect();
    let mut data = features.data.clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let center = features
        .center
        .iter()
        .zip(&means)
        .map(|(a, b)| a + b)
        .collect();
    FeatureMatrix::from_parts(data, true, center)
}
