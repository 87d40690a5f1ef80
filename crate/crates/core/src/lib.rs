//! Discrete latent factor hashing for cross-modal retrieval.
//!
//! Binary codes `U` (image side) and `V` (text side) are learned directly in
//! `{-1, +1}` by maximizing the likelihood of a cross-modal similarity
//! matrix under a logistic latent factor model, one code column at a time.
//! Each column update maximizes a quadratic lower bound of the likelihood in
//! closed form, so the objective never decreases.
//!
//! ```
//! use dlfh::{similarity_from_labels, synth_labels, train, Hyperparams, TrainConfig, TrainMode};
//!
//! let labels = synth_labels(60, 3, 7).unwrap();
//! let s = similarity_from_labels(&labels, &labels).unwrap();
//! let hyper = Hyperparams { code_len: 8, max_iter: 5, ..Default::default() };
//! let state = train(&s, &TrainConfig::new(hyper, TrainMode::Full).with_trace()).unwrap();
//! let trace = &state.objective_trace;
//! assert!(trace.windows(2).all(|w| w[1].1 >= w[0].1));
//! ```

pub mod bench;
pub mod codes;
pub mod data;
pub mod error;
pub mod model;
pub mod oos;
pub mod params;
pub mod pipeline;
pub mod retrieval;
pub mod similarity;
pub mod train;

pub use codes::CodeMatrix;
pub use data::{
    center, load_features, load_labels, make_split, save_features, save_labels,
    synth_crossmodal, synth_labels, synth_xor, FeatureFormat, FeatureMatrix, LabelMatrix, Split,
    SplitSpec, SynthData,
};
pub use error::{Error, Result};
pub use model::{
    closed_form_update, grad_u_col, grad_v_col, hess_bound_coeff, log_likelihood,
    relaxed_grad_u_col, relaxed_grad_v_col, relaxed_log_likelihood, sigmoid, softplus,
    surrogate_value, theta,
};
pub use oos::{
    fit_kernel, fit_linear, hash_kernel, hash_linear, load_model, save_model, HashFunction,
    HashModel, KernelHashModel, LinearHashModel, Modality,
};
pub use params::{Bandwidth, Hyperparams, KernelParams};
pub use retrieval::{
    average_precision, hamming, load_codes, mean_average_precision, rank_database, save_codes,
    GroundTruth, MapReport, PackedCodes,
};
pub use similarity::{similarity_from_labels, Similarity, SimilaritySource};
pub use train::{init_codes, train, TrainConfig, TrainMode, TrainState};
