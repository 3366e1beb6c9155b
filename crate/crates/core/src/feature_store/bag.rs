//! The `FBAG` binary container for one slide's patch features.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field           | type             |
//! |-----------------|------------------|
//! | magic           | `b"FBAG"`        |
//! | version         | `u16` (= 1)      |
//! | n_patches       | `u32`            |
//! | dim             | `u32`            |
//! | patch_size_px   | `u32`            |
//! | coords          | `n_patches × (u32 x, u32 y)` |
//! | features        | `n_patches × dim` `f32`, row-major |
//!
//! The slide id is not stored; [`read_feature_bag`] takes it from the file stem.

use std::fs;
use std::path::Path;

use super::FeatureStoreError;

pub const FBAG_MAGIC: [u8; 4] = *b"FBAG";
pub const FBAG_VERSION: u16 = 1;
/// Bytes before the coordinate block.
pub const FBAG_HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4;

/// One slide's patch-feature matrix with level-0 patch coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBag {
    pub slide_id: String,
    pub dim: usize,
    pub patch_size_px: u32,
    /// Top-left `(x, y)` of each patch in level-0 pixels.
    pub coords: Vec<(u32, u32)>,
    /// Row-major `n_patches × dim`.
    pub features: Vec<f32>,
}

impl FeatureBag {
    /// Builds a bag and checks every invariant.
    pub fn new(
        slide_id: impl Into<String>,
        dim: usize,
        patch_size_px: u32,
        coords: Vec<(u32, u32)>,
        features: Vec<f32>,
    ) -> Result<Self, FeatureStoreError> {
        let bag = FeatureBag { slide_id: slide_id.into(), dim, patch_size_px, coords, features };
        bag.validate()?;
        Ok(bag)
    }

    pub fn n_patches(&self) -> usize {
        self.coords.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn validate(&self) -> Result<(), FeatureStoreError> {
        let n = self.coords.len();
        if n == 0 {
            return Err(FeatureStoreError::Integrity("bag has no patches".into()));
        }
        if self.dim == 0 {
            return Err(FeatureStoreError::Integrity("feature dim is zero".into()));
        }
        if self.patch_size_px == 0 {
            return Err(FeatureStoreError::Integrity("patch size is zero".into()));
        }
        if n > u32::MAX as usize || self.dim > u32::MAX as usize {
            return Err(FeatureStoreError::Integrity("bag too large for u32 header".into()));
        }
        if self.features.len() != n * self.dim {
            return Err(FeatureStoreError::Integrity(format!(
                "feature payload has {} values, expected {n}×{}",
                self.features.len(),
                self.dim
            )));
        }
        if let Some(i) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(FeatureStoreError::Integrity(format!(
                "non-finite feature at patch {}, column {}",
                i / self.dim,
                i % self.dim
            )));
        }
        Ok(())
    }

    /// Serialises to the `FBAG` byte layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>, FeatureStoreError> {
        self.validate()?;
        let n = self.n_patches();
        let mut out = Vec::with_capacity(encoded_len(n, self.dim));
        out.extend_from_slice(&FBAG_MAGIC);
        out.extend_from_slice(&FBAG_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.patch_size_px.to_le_bytes());
        for &(x, y) in &self.coords {
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
        }
        for v in &self.features {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    /// Parses the `FBAG` byte layout.
    pub fn from_bytes(slide_id: impl Into<String>, bytes: &[u8]) -> Result<Self, FeatureStoreError> {
        if bytes.len() < FBAG_HEADER_LEN {
            return Err(FeatureStoreError::Length { expected: FBAG_HEADER_LEN, found: bytes.len() });
        }
        if bytes[..4] != FBAG_MAGIC {
            return Err(FeatureStoreError::Format(format!("bad magic {:?}", &bytes[..4])));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FBAG_VERSION {
            return Err(FeatureStoreError::Format(format!("unsupported version {version}")));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let n = u32_at(6) as usize;
        let dim = u32_at(10) as usize;
        let patch_size_px = u32_at(14);
        let expected = n
            .checked_mul(dim)
            .and_then(|nd| nd.checked_mul(4))
            .and_then(|f| f.checked_add(n * 8 + FBAG_HEADER_LEN))
            .ok_or_else(|| FeatureStoreError::Format("header sizes overflow".into()))?;
        if bytes.len() != expected {
            return Err(FeatureStoreError::Length { expected, found: bytes.len() });
        }
        let mut off = FBAG_HEADER_LEN;
        let mut coords = Vec::with_capacity(n);
        for _ in 0..n {
            coords.push((u32_at(off), u32_at(off + 4)));
            off += 8;
        }
        let features = bytes[off..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        FeatureBag::new(slide_id, dim, patch_size_px, coords, features)
    }
}

/// Total encoded size of an `n × dim` bag.
pub fn encoded_len(n_patches: usize, dim: usize) -> usize {
    FBAG_HEADER_LEN + n_patches * 8 + n_patches * dim * 4
}

pub fn write_feature_bag(bag: &FeatureBag, path: impl AsRef<Path>) -> Result<(), FeatureStoreError> {
    let path = path.as_ref();
    let bytes = bag.to_bytes()?;
    fs::write(path, bytes).map_err(|e| FeatureStoreError::io(path, e))
}

/// Reads a bag; the slide id is the file stem.
pub fn read_feature_bag(path: impl AsRef<Path>) -> Result<FeatureBag, FeatureStoreError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| FeatureStoreError::io(path, e))?;
    let slide_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    FeatureBag::from_bytes(slide_id, &bytes)
}
