//! Attention-based multiple instance learning classifier.
//!
//! For a bag of patch features `h_i` the model computes
//!
//! ```text
//! u_i = relu(W1ᵀ h_i + b1)            (then parameter dropout in training)
//! s_i = wᵀ tanh(Vᵀ u_i + bv)
//! a   = softmax(s)
//! z   = Σ a_i u_i
//! y   = W2ᵀ z + b2
//! ```
//!
//! Gradients are derived by hand in [`backward`] and checked against finite
//! differences in the test suite. Training uses the balanced cross-entropy,
//! class-balanced slide sampling, Adam with coupled L2 and plateau decay.

mod adam;
mod backward;
mod checkpoint;
mod config;
mod forward;
mod loss;
mod params;
mod train;

use std::path::{Path, PathBuf};

pub use adam::{adam_step, AdamHyper, AdamState};
pub use backward::backward;
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use config::{format_model_size, parse_model_size, Hyperparameter, TrainConfig};
pub use forward::{forward, forward_rows, softmax, Forward, ForwardCache, Mode};
pub use loss::{balanced_ce_loss, class_weights, predict_proba, PROB_FLOOR};
pub use params::{AbmilParams, ModelShape, TENSOR_NAMES};
pub use train::{
    class_counts, mean_loss, read_history_csv, train_fold, write_history_csv, ClassBalancedSampler, EpochRecord,
    Sample, TrainOutcome, PLATEAU_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum AbmilError {
    #[error("bag has no patches")]
    EmptyBag,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("forward cache does not belong to these parameters")]
    StaleCache,
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AbmilError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AbmilError::Io { path: path.to_path_buf(), source }
    }
}
