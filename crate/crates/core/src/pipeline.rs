//! Train, fit hash functions and evaluate in one call.
//!
//! Image-to-text retrieval hashes image queries with the x-side model and
//! ranks the learned text codes `V`; text-to-image hashes text queries with
//! the y-side model and ranks `U`.

use crate::codes::CodeMatrix;
use crate::data::{center, FeatureMatrix, LabelMatrix};
use crate::error::{Error, Result};
use crate::oos::{fit_kernel, fit_linear, HashFunction, HashModel};
use crate::params::Hyperparams;
use crate::retrieval::{mean_average_precision, GroundTruth, MapReport};
use crate::similarity::similarity_from_labels;
use crate::train::{train, TrainConfig, TrainState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OosKind {
    Linear,
    Kernel,
}

/// One side of a dataset: paired features plus labels.
#[derive(Clone, Debug)]
pub struct CrossModalSet {
    pub x: FeatureMatrix,
    pub y: FeatureMatrix,
    pub labels: LabelMatrix,
}

impl CrossModalSet {
    pub fn new(x: FeatureMatrix, y: FeatureMatrix, labels: LabelMatrix) -> Result<Self> {
        if x.rows() != y.rows() || x.rows() != labels.rows() {
            return Err(Error::contract(format!(
                "row counts differ: x {}, y {}, labels {}",
                x.rows(),
                y.rows(),
                labels.rows()
            )));
        }
        Ok(CrossModalSet { x, y, labels })
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Ok(CrossModalSet {
            x: self.x.select_rows(rows)?,
            y: self.y.select_rows(rows)?,
            labels: self.labels.select_rows(rows)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Fitted {
    pub state: TrainState,
    pub model_x: HashModel,
    pub model_y: HashModel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossModalMap {
    pub image_to_text: MapReport,
    pub text_to_image: MapReport,
}

/// Learns codes from the training labels, then fits one hash function per
/// modality on the centered training features.
pub fn fit(train_set: &CrossModalSet, config: &TrainConfig, oos: OosKind) -> Result<Fitted> {
    let s = similarity_from_labels(&train_set.labels, &train_set.labels)?;
    let state = train(&s, config)?;
    let hyper = &config.hyper;
    let model_x = fit_side(&train_set.x, &state.u, hyper, hyper.gamma_x, oos, 0)?;
    let model_y = fit_side(&train_set.y, &state.v, hyper, hyper.gamma_y, oos, 1)?;
    Ok(Fitted {
        state,
        model_x,
        model_y,
    })
}

fn fit_side(
    features: &FeatureMatrix,
    codes: &CodeMatrix,
    hyper: &Hyperparams,
    gamma: f64,
    oos: OosKind,
    salt: u64,
) -> Result<HashModel> {
    let centered = center(features);
    Ok(match oos {
        OosKind::Linear => HashModel::Linear(fit_linear(&centered, codes, gamma)?),
        OosKind::Kernel => HashModel::Kernel(fit_kernel(
            &centered,
            codes,
            &hyper.kernel.unwrap_or_default(),
            hyper.seed.wrapping_add(salt),
        )?),
    })
}

/// MAP in both directions against the learned training codes.
pub fn evaluate(
    fitted: &Fitted,
    queries: &CrossModalSet,
    db_labels: &LabelMatrix,
    cutoff: Option<usize>,
) -> Result<CrossModalMap> {
    let qx = fitted.model_x.encode(&queries.x)?;
    let qy = fitted.model_y.encode(&queries.y)?;
    evaluate_codes(&qx, &qy, &fitted.state.u, &fitted.state.v, &queries.labels, db_labels, cutoff)
}

pub fn evaluate_codes(
    query_x: &CodeMatrix,
    query_y: &CodeMatrix,
    db_u: &CodeMatrix,
    db_v: &CodeMatrix,
    query_labels: &LabelMatrix,
    db_labels: &LabelMatrix,
    cutoff: Option<usize>,
) -> Result<CrossModalMap> {
    let truth = GroundTruth::from_labels(query_labels, db_labels)?;
    Ok(CrossModalMap {
        image_to_text: mean_average_precision(query_x, db_v, &truth, cutoff)?,
        text_to_image: mean_average_precision(query_y, db_u, &truth, cutoff)?,
    })
}

/// [`fit`] on `train_set` followed by [`evaluate`] on `queries`.
pub fn run(
    train_set: &CrossModalSet,
    queries: &CrossModalSet,
    config: &TrainConfig,
    oos: OosKind,
) -> Result<(Fitted, CrossModalMap)> {
    let fitted = fit(train_set, config, oos)?;
    let map = evaluate(&fitted, queries, &train_set.labels, None)?;
    Ok((fitted, map))
}
