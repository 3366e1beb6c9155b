//! Dataset model: subtype labels, slide manifests and patch-feature bags.

mod bag;
mod label;
mod manifest;

use std::path::{Path, PathBuf};

pub use bag::{
    encoded_len, read_feature_bag, write_feature_bag, FeatureBag, FBAG_HEADER_LEN, FBAG_MAGIC,
    FBAG_VERSION,
};
pub use label::{SubtypeLabel, NUM_CLASSES};
pub use manifest::{load_manifest, parse_manifest, validate_records, write_manifest, SlideRecord, MANIFEST_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum FeatureStoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("duplicate slide id `{0}`")]
    DuplicateSlide(String),
    #[error("case `{case_id}` carries two labels: {first} and {second}")]
    LabelConflict {
        case_id: String,
        first: SubtypeLabel,
        second: SubtypeLabel,
    },
    #[error("unknown subtype label `{0}`")]
    UnknownLabel(String),
    #[error("feature bag format error: {0}")]
    Format(String),
    #[error("feature bag length mismatch: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("feature bag integrity error: {0}")]
    Integrity(String),
}

impl FeatureStoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FeatureStoreError::Io { path: path.to_path_buf(), source }
    }
}
