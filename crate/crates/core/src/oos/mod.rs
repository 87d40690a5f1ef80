//! Out-of-sample hash functions, fitted to the learned training codes.
//!
//! Both kinds subtract the stored training mean from raw queries before
//! projecting, so the same raw feature files can be fed to `encode` that were
//! used (after centering) for fitting.

mod format;
mod kernel;
mod linear;

pub use format::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use kernel::{
    auto_bandwidth, fit_kernel, fit_logistic, hash_kernel, KernelHashModel, LogisticFit, GRAD_TOL,
};
pub use linear::{fit_linear, hash_linear, LinearHashModel};

use nalgebra::DMatrix;

use crate::codes::CodeMatrix;
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Which side of the cross-modal pair a model hashes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modality {
    /// Image side, codes `U`.
    X,
    /// Text side, codes `V`.
    Y,
}

impl Modality {
    pub fn tag(self) -> u8 {
        match self {
            Modality::X => 0,
            Modality::Y => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Modality::X),
            1 => Ok(Modality::Y),
            other => Err(Error::Format(format!("unknown modality tag {other}"))),
        }
    }
}

pub trait HashFunction {
    fn dim(&self) -> usize;
    fn bits(&self) -> usize;
    /// Code for one raw (uncentered) query; `sign(0) = +1`.
    fn hash(&self, query: &[f64]) -> Result<Vec<i8>>;
    /// Codes for every row; rows are mapped back to raw coordinates first.
    fn encode(&self, features: &FeatureMatrix) -> Result<CodeMatrix>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum HashModel {
    Linear(LinearHashModel),
    Kernel(KernelHashModel),
}

impl HashFunction for HashModel {
    fn dim(&self) -> usize {
        match self {
            HashModel::Linear(m) => m.dim(),
            HashModel::Kernel(m) => m.dim(),
        }
    }

    fn bits(&self) -> usize {
        match self {
            HashModel::Linear(m) => m.bits(),
            HashModel::Kernel(m) => m.bits(),
        }
    }

    fn hash(&self, query: &[f64]) -> Result<Vec<i8>> {
        match self {
            HashModel::Linear(m) => m.hash(query),
            HashModel::Kernel(m) => m.hash(query),
        }
    }

    fn encode(&self, features: &FeatureMatrix) -> Result<CodeMatrix> {
        match self {
            HashModel::Linear(m) => m.encode(features),
            HashModel::Kernel(m) => m.encode(features),
        }
    }
}

pub(crate) fn codes_as_matrix(codes: &CodeMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(codes.rows(), codes.bits(), |i, k| codes.get(i, k) as f64)
}

pub(crate) fn encode_rows(model: &impl HashFunction, features: &FeatureMatrix) -> Result<CodeMatrix> {
    let offset = features.center();
    let mut signs = Vec::with_capacity(features.rows() * model.bits());
    for i in 0..features.rows() {
        let raw: Vec<f64> = features.row(i).iter().zip(offset).map(|(v, c)| v + c).collect();
        signs.extend(model.hash(&raw)?);
    }
    CodeMatrix::from_signs(features.rows(), model.bits(), &signs)
}
