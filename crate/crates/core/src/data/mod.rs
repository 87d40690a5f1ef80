//! Dataset ingestion, centering, splits and synthetic data.

mod features;
pub mod io;
mod labels;
mod split;
mod synth;

pub use features::{center, FeatureMatrix};
pub use io::{load_features, load_labels, save_features, save_labels, FeatureFormat};
pub use labels::LabelMatrix;
pub use split::{make_split, Split, SplitSpec};
pub use synth::{synth_crossmodal, synth_labels, synth_xor, SynthData};
