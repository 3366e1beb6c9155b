//! Macenko stain separation and normalisation in optical-density space.
//!
//! Optical density per channel is `OD = −log10((I + 1) / 256)`, so stains mix
//! linearly: `OD = S · c` with `S` a 3×2 matrix of unit stain vectors and
//! `c` non-negative concentrations. The stain plane is spanned by the top two
//! right singular vectors of the tissue OD matrix; the stain vectors are the
//! robust angular extremes of the projected pixels within that plane.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::{PreprocessError, RgbTile};
use crate::numeric::percentile;

pub type StainVector = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct MacenkoConfig {
    /// Pixels whose summed OD falls below this are treated as background.
    pub od_cutoff: f64,
    /// Angular percentiles taken as the stain extremes.
    pub angle_percentiles: (f64, f64),
    /// Percentile of each concentration channel matched to the reference.
    pub conc_percentile: f64,
    pub min_tissue_pixels: usize,
}

impl Default for MacenkoConfig {
    fn default() -> Self {
        MacenkoConfig {
            od_cutoff: 0.15,
            angle_percentiles: (1.0, 99.0),
            conc_percentile: 99.0,
            min_tissue_pixels: 100,
        }
    }
}

/// Target stain basis and concentration scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MacenkoReference {
    /// Unit OD vectors, hematoxylin-like (larger red OD) first.
    pub stains: [StainVector; 2],
    /// Per-stain concentration at `conc_percentile`.
    pub max_conc: [f64; 2],
}

impl Default for MacenkoReference {
    /// The widely used H&E reference basis, with concentrations rescaled from
    /// natural-log to base-10 optical density.
    fn default() -> Self {
        let ln10 = std::f64::consts::LN_10;
        MacenkoReference {
            stains: [normalise([0.5626, 0.7201, 0.4062]), normalise([0.2159, 0.8012, 0.5581])],
            max_conc: [1.9705 / ln10, 1.0308 / ln10],
        }
    }
}

impl MacenkoReference {
    /// Fits the reference basis and concentration scale from a tile.
    pub fn from_tile(tile: &RgbTile, config: &MacenkoConfig) -> Result<Self, PreprocessError> {
        let fit = estimate_stains(tile, config)?;
        Ok(MacenkoReference { stains: fit.stains, max_conc: fit.max_conc })
    }
}

/// Result of stain separation on one tile.
#[derive(Debug, Clone)]
pub struct StainFit {
    pub stains: [StainVector; 2],
    /// Non-negative concentrations for every pixel, row-major.
    pub concentrations: Vec<[f64; 2]>,
    pub max_conc: [f64; 2],
}

#[inline]
pub fn optical_density(p: [u8; 3]) -> Vector3<f64> {
    Vector3::new(od1(p[0]), od1(p[1]), od1(p[2]))
}

#[inline]
fn od1(v: u8) -> f64 {
    -((v as f64 + 1.0) / 256.0).log10()
}

/// Inverse of [`optical_density`], rounded and clamped to 0..=255.
pub fn od_to_rgb(od: Vector3<f64>) -> [u8; 3] {
    [0, 1, 2].map(|c| (256.0 * 10f64.powf(-od[c]) - 1.0).round().clamp(0.0, 255.0) as u8)
}

fn normalise(v: StainVector) -> StainVector {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

/// Separates the two dominant stains of a tile.
pub fn estimate_stains(tile: &RgbTile, config: &MacenkoConfig) -> Result<StainFit, PreprocessError> {
    let ods: Vec<Vector3<f64>> = tile.iter_pixels().map(optical_density).collect();
    let tissue: Vec<&Vector3<f64>> = ods.iter().filter(|od| od.sum() >= config.od_cutoff).collect();
    if tissue.len() < config.min_tissue_pixels.max(2) {
        return Err(PreprocessError::InsufficientTissue { found: tissue.len(), required: config.min_tissue_pixels });
    }

    let mut gram = Matrix3::<f64>::zeros();
    for od in &tissue {
        gram += *od * od.transpose();
    }
    let eig = SymmetricEigen::new(gram);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (l1, l2) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if !(l1 > 0.0) || l2 <= 1e-10 * l1 {
        return Err(PreprocessError::DegenerateStain("optical densities span fewer than two directions".into()));
    }
    let mut v1: Vector3<f64> = eig.eigenvectors.column(order[0]).into();
    let v2: Vector3<f64> = eig.eigenvectors.column(order[1]).into();
    if v1.sum() < 0.0 {
        v1 = -v1;
    }

    let angles: Vec<f64> = tissue.iter().map(|od| od.dot(&v2).atan2(od.dot(&v1))).collect();
    let lo = percentile(&angles, config.angle_percentiles.0);
    let hi = percentile(&angles, config.angle_percentiles.1);
    let along = |phi: f64| -> StainVector {
        let v = v1 * phi.cos() + v2 * phi.sin();
        let v = if v.sum() < 0.0 { -v } else { v };
        normalise([v[0], v[1], v[2]])
    };
    let (a, b) = (along(lo), along(hi));
    let stains = if a[0] >= b[0] { [a, b] } else { [b, a] };

    let solver = ConcentrationSolver::new(&stains)?;
    let concentrations: Vec<[f64; 2]> = ods.iter().map(|od| solver.solve(od)).collect();
    let tissue_conc: Vec<[f64; 2]> = ods
        .iter()
        .zip(&concentrations)
        .filter(|(od, _)| od.sum() >= config.od_cutoff)
        .map(|(_, c)| *c)
        .collect();
    let max_conc = [0, 1].map(|k| {
        let col: Vec<f64> = tissue_conc.iter().map(|c| c[k]).collect();
        percentile(&col, config.conc_percentile)
    });
    Ok(StainFit { stains, concentrations, max_conc })
}

/// Exact two-variable non-negative least squares against a fixed basis.
pub struct ConcentrationSolver {
    s1: Vector3<f64>,
    s2: Vector3<f64>,
    gram_inv: [[f64; 2]; 2],
    n11: f64,
    n22: f64,
}

impl ConcentrationSolver {
    pub fn new(stains: &[StainVector; 2]) -> Result<Self, PreprocessError> {
        let s1 = Vector3::from(stains[0]);
        let s2 = Vector3::from(stains[1]);
        let (g11, g12, g22) = (s1.dot(&s1), s1.dot(&s2), s2.dot(&s2));
        let det = g11 * g22 - g12 * g12;
        if det.abs() <= 1e-12 * g11 * g22 {
            return Err(PreprocessError::DegenerateStain("stain vectors are collinear".into()));
        }
        Ok(ConcentrationSolver {
            s1,
            s2,
            gram_inv: [[g22 / det, -g12 / det], [-g12 / det, g11 / det]],
            n11: g11,
            n22: g22,
        })
    }

    pub fn solve(&self, od: &Vector3<f64>) -> [f64; 2] {
        let (b1, b2) = (self.s1.dot(od), self.s2.dot(od));
        let c1 = self.gram_inv[0][0] * b1 + self.gram_inv[0][1] * b2;
        let c2 = self.gram_inv[1][0] * b1 + self.gram_inv[1][1] * b2;
        if c1 >= 0.0 && c2 >= 0.0 {
            return [c1, c2];
        }
        let only1 = [(b1 / self.n11).max(0.0), 0.0];
        let only2 = [0.0, (b2 / self.n22).max(0.0)];
        let resid = |c: [f64; 2]| (self.s1 * c[0] + self.s2 * c[1] - od).norm_squared();
        if resid(only1) <= resid(only2) {
            only1
        } else {
            only2
        }
    }
}

/// Re-renders `tile` with the reference stains and concentration scale.
pub fn macenko_normalise(
    tile: &RgbTile,
    reference: &MacenkoReference,
    config: &MacenkoConfig,
) -> Result<RgbTile, PreprocessError> {
    let fit = estimate_stains(tile, config)?;
    if fit.max_conc.iter().any(|&m| m <= 0.0) {
        return Err(PreprocessError::DegenerateStain("a stain has zero concentration".into()));
    }
    let scale = [reference.max_conc[0] / fit.max_conc[0], reference.max_conc[1] / fit.max_conc[1]];
    let r1 = Vector3::from(reference.stains[0]);
    let r2 = Vector3::from(reference.stains[1]);
    let mut pixels = Vec::with_capacity(tile.n_pixels() * 3);
    for c in &fit.concentrations {
        let od = r1 * (c[0] * scale[0]) + r2 * (c[1] * scale[1]);
        pixels.extend_from_slice(&od_to_rgb(od));
    }
    RgbTile::new(tile.width(), tile.height(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn od_round_trips_all_intensities() {
        for v in 0..=255u8 {
            assert_eq!(od_to_rgb(optical_density([v, v, v])), [v, v, v]);
        }
        assert_eq!(od1(255), 0.0);
    }

    #[test]
    fn nnls_clamps_to_boundary() {
        let solver = ConcentrationSolver::new(&[normalise([1.0, 0.0, 0.0]), normalise([1.0, 1.0, 0.0])]).unwrap();
        let c = solver.solve(&Vector3::new(2.0, 0.0, 0.0));
        assert!((c[0] - 2.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        // Negative along the second axis only: the unconstrained answer is infeasible.
        let c = solver.solve(&Vector3::new(0.0, -1.0, 0.0));
        assert!(c[0] >= 0.0 && c[1] >= 0.0);
        assert!(ConcentrationSolver::new(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn blank_tile_has_no_tissue() {
        let white = RgbTile::filled(32, 32, [255, 255, 255]).unwrap();
        let err = macenko_normalise(&white, &MacenkoReference::default(), &MacenkoConfig::default()).unwrap_err();
        assert!(matches!(err, PreprocessError::InsufficientTissue { .. }));
    }

    #[test]
    fn single_colour_tissue_is_rank_deficient() {
        let t = RgbTile::filled(16, 16, [120, 60, 150]).unwrap();
        let err = estimate_stains(&t, &MacenkoConfig::default()).unwrap_err();
        assert!(matches!(err, PreprocessError::DegenerateStain(_)));
    }
}
