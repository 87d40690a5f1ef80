use nalgebra::{Cholesky, DMatrix};

use super::{codes_as_matrix, encode_rows, HashFunction};
use crate::codes::CodeMatrix;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Relative tolerance on the normal-equations residual.
const RESIDUAL_TOL: f64 = 1e-6;

/// `h(x) = sign(W^T (x - center))`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearHashModel {
    weights: DMatrix<f64>,
    center: Vec<f64>,
}

impl LinearHashModel {
    pub fn new(weights: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        if weights.nrows() != center.len() {
            return Err(Error::contract(format!(
                "weights have {} rows but center has {} entries",
                weights.nrows(),
                center.len()
            )));
        }
        if weights.iter().chain(&center).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite linear hash weights".into()));
        }
        Ok(LinearHashModel { weights, center })
    }

    /// `d x c` projection.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Real-valued projections `W^T (x - center)`.
    pub fn project(&self, query: &[f64]) -> Result<Vec<f64>> {
        check_dim(query.len(), self.dim())?;
        let c = self.bits();
        let mut out = vec![0.0; c];
        for (j, (&q, &m)) in query.iter().zip(&self.center).enumerate() {
            let x = q - m;
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.weights[(j, k)] * x;
            }
        }
        Ok(out)
    }
}

impl HashFunction for LinearHashModel {
    fn dim(&self) -> usize {
        self.weights.nrows()
    }

    fn bits(&self) -> usize {
        self.weights.ncols()
    }

    fn hash(&self, query: &[f64]) -> Result<Vec<i8>> {
        Ok(self.project(query)?.into_iter().map(crate::model::sign).collect())
    }

    fn encode(&self, features: &FeatureMatrix) -> Result<CodeMatrix> {
        check_dim(features.cols(), self.dim())?;
        encode_rows(self, features)
    }
}

pub(crate) fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "query has dimension {got}, model expects {expected}"
        )))
    }
}

/// Ridge regression of the codes on the features:
/// `W = (X^T X + gamma I)^{-1} X^T B`, solved by Cholesky factorization.
///
/// `x` should already be centered; its stored center becomes the model's.
pub fn fit_linear(x: &FeatureMatrix, codes: &CodeMatrix, gamma: f64) -> Result<LinearHashModel> {
    if x.rows() != codes.rows() {
        return Err(Error::contract(format!(
            "{} feature rows but {} code rows",
            x.rows(),
            codes.rows()
        )));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
    }
    let xm = x.matrix();
    let b = codes_as_matrix(codes);
    let d = xm.ncols();
    let mut gram = xm.tr_mul(xm);
    for i in 0..d {
        gram[(i, i)] += gamma;
    }
    let rhs = xm.tr_mul(&b);

    let singular = || {
        Error::Singular(if gamma == 0.0 {
            "X^T X is rank deficient; use gamma > 0".to_string()
        } else {
            format!("X^T X + {gamma} I is not positive definite")
        })
    };
    let chol = Cholesky::new(gram.clone()).ok_or_else(singular)?;
    let diag_max = gram.diagonal().max();
    let pivot_min = chol.l_dirty().diagonal().iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    if pivot_min.is_nan() || pivot_min <= diag_max * d as f64 * f64::EPSILON * 16.0 {
        return Err(singular());
    }
    let weights = chol.solve(&rhs);

    let residual = &gram * &weights - &rhs;
    let scale = rhs.amax();
    let worst = residual.amax();
    if worst.is_nan() || worst > RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "ridge residual {} exceeds {RESIDUAL_TOL} * {scale}",
            residual.amax()
        )));
    }
    LinearHashModel::new(weights, x.center().to_vec())
}

pub fn hash_linear(model: &LinearHashModel, query: &[f64]) -> Result<Vec<i8>> {
    model.hash(query)
}
