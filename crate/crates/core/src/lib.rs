//! Slide-level subtype classification from precomputed patch features.
//!
//! The crate covers everything downstream of feature extraction:
//!
//! * [`feature_store`]: manifests binding slides to cases and labels, and the
//!   `FBAG` binary format for patch-feature bags.
//! * [`preprocess`]: tile-level tissue segmentation, patch grids, stain
//!   normalisation (Reinhard, Macenko), colour augmentation.
//! * [`abmil`]: the attention-based MIL classifier with hand-derived
//!   gradients, Adam, and the fold training loop.
//! * [`orchestrator`]: stratified case-level cross-validation, ensembling and
//!   the iterative grid-search tuner.
//! * [`stats`]: balanced accuracy, macro AUROC/F1, bootstrap intervals, paired
//!   t-tests, Benjamini–Hochberg adjustment and linear fits.
//! * [`heatmap`]: attention overlays rendered to RGB images.

pub mod abmil;
pub mod feature_store;
pub mod heatmap;
pub mod kv;
pub mod numeric;
pub mod orchestrator;
pub mod preprocess;
pub mod stats;

pub use feature_store::{FeatureBag, SlideRecord, SubtypeLabel, NUM_CLASSES};
