//! Reinhard colour transfer: moment matching in the lαβ space.
//!
//! RGB (0..=255) is mapped to LMS cone space, then to log10 LMS, then
//! decorrelated into lαβ:
//!
//! ```text
//! l = (L + M + S) / √3
//! α = (L + M − 2S) / √6
//! β = (L − M) / √2
//! ```
//!
//! LMS values below 1.0 are floored at 1.0 before the logarithm so black
//! pixels stay finite.

use nalgebra::{Matrix3, Vector3};

use super::{PreprocessError, RgbTile};

const RGB_TO_LMS: [[f64; 3]; 3] = [
    [0.3811, 0.5783, 0.0402],
    [0.1967, 0.7244, 0.0782],
    [0.0241, 0.1288, 0.8444],
];

const LMS_FLOOR: f64 = 1.0;

/// Per-channel mean and standard deviation in lαβ space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

struct LabTransform {
    rgb_to_lms: Matrix3<f64>,
    lms_to_rgb: Matrix3<f64>,
    log_to_lab: Matrix3<f64>,
    lab_to_log: Matrix3<f64>,
}

impl LabTransform {
    fn new() -> Self {
        let rgb_to_lms = Matrix3::from_fn(|r, c| RGB_TO_LMS[r][c]);
        let (a, b, c) = (1.0 / 3f64.sqrt(), 1.0 / 6f64.sqrt(), 1.0 / 2f64.sqrt());
        let log_to_lab = Matrix3::new(a, a, a, b, b, -2.0 * b, c, -c, 0.0);
        LabTransform {
            lms_to_rgb: rgb_to_lms.try_inverse().expect("RGB→LMS matrix is invertible"),
            lab_to_log: log_to_lab.try_inverse().expect("log-LMS→lαβ matrix is invertible"),
            rgb_to_lms,
            log_to_lab,
        }
    }

    fn to_lab(&self, p: [u8; 3]) -> Vector3<f64> {
        let rgb = Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64);
        let lms = (self.rgb_to_lms * rgb).map(|v| v.max(LMS_FLOOR).log10());
        self.log_to_lab * lms
    }

    fn to_rgb(&self, lab: Vector3<f64>) -> [u8; 3] {
        let lms = (self.lab_to_log * lab).map(|v| 10f64.powf(v));
        let rgb = self.lms_to_rgb * lms;
        [0, 1, 2].map(|c| rgb[c].round().clamp(0.0, 255.0) as u8)
    }
}

/// Measures the lαβ mean and (population) standard deviation of a tile.
pub fn lab_stats(tile: &RgbTile) -> LabStats {
    let tf = LabTransform::new();
    let labs: Vec<Vector3<f64>> = tile.iter_pixels().map(|p| tf.to_lab(p)).collect();
    stats_of(&labs)
}

fn stats_of(labs: &[Vector3<f64>]) -> LabStats {
    let n = labs.len() as f64;
    let mut mean = [0.0; 3];
    for v in labs {
        for c in 0..3 {
            mean[c] += v[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for v in labs {
        for c in 0..3 {
            var[c] += (v[c] - mean[c]).powi(2);
        }
    }
    LabStats { mean, std: var.map(|s| (s / n).sqrt()) }
}

/// Shifts and scales each lαβ channel of `tile` to the target moments.
pub fn reinhard_normalise(tile: &RgbTile, target: &LabStats) -> Result<RgbTile, PreprocessError> {
    if target.std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || target.mean.iter().any(|m| !m.is_finite()) {
        return Err(PreprocessError::Parameter("target lαβ statistics must be finite, std ≥ 0".into()));
    }
    let tf = LabTransform::new();
    let labs: Vec<Vector3<f64>> = tile.iter_pixels().map(|p| tf.to_lab(p)).collect();
    let src = stats_of(&labs);
    if src.std.iter().any(|&s| s < 1e-12) {
        return Err(PreprocessError::DegenerateTile);
    }
    let scale: [f64; 3] = [0, 1, 2].map(|c| target.std[c] / src.std[c]);
    let mut pixels = Vec::with_capacity(labs.len() * 3);
    for v in labs {
        let out = Vector3::from_fn(|c, _| (v[c] - src.mean[c]) * scale[c] + target.mean[c]);
        pixels.extend_from_slice(&tf.to_rgb(out));
    }
    RgbTile::new(tile.width(), tile.height(), pixels)
}
