//! Case-level cross-validation, ensembling and iterative grid-search tuning.
//!
//! A run splits the training manifest into `k` class-stratified case groups.
//! Fold `i` tests on group `i`, validates on group `i + 1 mod k` and trains
//! on the rest, so every case is tested exactly once and all slides of a
//! case stay on the same side of every split. Fold models are averaged to
//! predict on hold-out sets.
//!
//! Tuning follows a schedule of iterations, each activating a few
//! hyperparameters. The Cartesian grid over the active ones is scored by
//! mean fold validation loss with everything else frozen at the current best,
//! and the argmin is carried forward.

use std::path::{Path, PathBuf};

use crate::abmil::AbmilError;
use crate::feature_store::FeatureStoreError;
use crate::stats::StatsError;

mod dataset;
mod ensemble;
mod experiment;
mod folds;
mod presets;
mod schedule;
mod tune;

pub use dataset::Dataset;
pub use ensemble::{ensemble_predict, mean_probabilities, predict_bag};
pub use experiment::{ensemble_labels, run_experiment, ExperimentOptions, ExperimentResult};
pub use folds::{
    case_groups, case_labels, read_folds_csv, stratified_case_kfold, write_folds_csv, FoldSplit, Split,
};
pub use presets::{preset, Preset, PRESETS};
pub use schedule::{HyperGrid, TuningSchedule, MAX_ACTIVE};
pub use tune::{
    fold_config, run_tuning, write_tuning_trace_csv, ConfigScorer, EvaluatedConfig, IterationTrace,
    TrainingScorer, TuningTrace,
};

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("stratification failed: {0}")]
    Stratification(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Abmil(#[from] AbmilError),
    #[error(transparent)]
    Store(#[from] FeatureStoreError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl OrchestratorError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        OrchestratorError::Io { path: path.to_path_buf(), source }
    }
}
