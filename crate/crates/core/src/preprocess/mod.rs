//! Tile-level preprocessing: tissue segmentation, patch grids, resampling,
//! stain normalisation, colour augmentation and channel standardisation.
//!
//! Every operation is a pure function of its inputs; random augmentation
//! carries its seed in [`AugmentParams`].

mod augment;
mod grid;
mod macenko;
mod reinhard;
mod segment;
mod standardise;
mod tile;

pub use augment::{apply_jitter, colour_augment, hsv_to_rgb, rgb_to_hsv, AugmentParams, Jitter};
pub use grid::{downsample, patch_grid, DEFAULT_MIN_TISSUE_FRACTION};
pub use macenko::{
    estimate_stains, macenko_normalise, od_to_rgb, optical_density, ConcentrationSolver, MacenkoConfig,
    MacenkoReference, StainFit, StainVector,
};
pub use reinhard::{lab_stats, reinhard_normalise, LabStats};
pub use segment::{
    median_filter, otsu_threshold, pixel_saturation, saturation_channel, saturation_histogram, segment_tissue,
    segment_tissue_fixed, segment_tissue_otsu, SegmentConfig, DEFAULT_SATURATION_THRESHOLD,
};
pub use standardise::{channel_standardise, StandardisedTile, IMAGENET_MEAN, IMAGENET_STD};
pub use tile::{RgbTile, TissueMask};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("histogram has fewer than two populated bins")]
    DegenerateHistogram,
    #[error("tile has zero variance in an lαβ channel")]
    DegenerateTile,
    #[error("insufficient tissue: {found} pixels above the optical-density cutoff, need {required}")]
    InsufficientTissue { found: usize, required: usize },
    #[error("degenerate stain estimate: {0}")]
    DegenerateStain(String),
    #[error("image i/o: {0}")]
    Image(String),
}
