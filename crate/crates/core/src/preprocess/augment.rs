use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PreprocessError, RgbTile};

/// Jitter ranges for offline colour augmentation.
///
/// One value per property is drawn uniformly from its range; the four
/// adjustments are applied as brightness, contrast, saturation, hue.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    /// Additive brightness offset drawn from `[-d, d]`, on the 0..1 scale.
    pub brightness_delta: f64,
    /// Contrast factor range, blending toward the tile's mean luminance.
    pub contrast_factor: (f64, f64),
    /// Saturation factor range, blending toward each pixel's luminance.
    pub saturation_factor: (f64, f64),
    /// Hue rotation drawn from `[-h, h]`, as a fraction of the hue circle.
    pub hue_shift: f64,
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            brightness_delta: 0.25,
            contrast_factor: (0.75, 1.25),
            saturation_factor: (0.75, 1.25),
            hue_shift: 0.04,
            seed: 0,
        }
    }
}

impl AugmentParams {
    /// All-zero jitter: augmentation is the identity.
    pub fn identity(seed: u64) -> Self {
        AugmentParams {
            brightness_delta: 0.0,
            contrast_factor: (1.0, 1.0),
            saturation_factor: (1.0, 1.0),
            hue_shift: 0.0,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        AugmentParams { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !(self.brightness_delta >= 0.0 && self.brightness_delta.is_finite()) {
            return Err(PreprocessError::Parameter("brightness delta must be finite and ≥ 0".into()));
        }
        if !range_ok(self.contrast_factor) || !range_ok(self.saturation_factor) {
            return Err(PreprocessError::Parameter("contrast/saturation factors must be positive ranges".into()));
        }
        if !(0.0..=0.5).contains(&self.hue_shift) {
            return Err(PreprocessError::Parameter("hue shift must lie within 0..=0.5".into()));
        }
        Ok(())
    }
}

/// The jitter values actually applied to one tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub hue: f64,
}

impl Jitter {
    pub fn sample(params: &AugmentParams) -> Jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut uniform = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        Jitter {
            brightness: uniform(-params.brightness_delta, params.brightness_delta),
            contrast: uniform(params.contrast_factor.0, params.contrast_factor.1),
            saturation: uniform(params.saturation_factor.0, params.saturation_factor.1),
            hue: uniform(-params.hue_shift, params.hue_shift),
        }
    }
}

fn luminance(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

/// Applies randomly drawn brightness, contrast, saturation and hue jitter.
pub fn colour_augment(tile: &RgbTile, params: &AugmentParams) -> Result<RgbTile, PreprocessError> {
    params.validate()?;
    Ok(apply_jitter(tile, Jitter::sample(params)))
}

/// Deterministic jitter application; zero-chroma pixels never gain colour.
pub fn apply_jitter(tile: &RgbTile, j: Jitter) -> RgbTile {
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let mut px: Vec<[f64; 3]> =
        tile.iter_pixels().map(|p| p.map(|c| c as f64 / 255.0)).collect();

    if j.brightness != 0.0 {
        px.iter_mut().for_each(|p| *p = p.map(|c| clamp(c + j.brightness)));
    }
    if j.contrast != 1.0 {
        let mean = px.iter().map(|&p| luminance(p)).sum::<f64>() / px.len() as f64;
        px.iter_mut().for_each(|p| *p = p.map(|c| clamp(mean + j.contrast * (c - mean))));
    }
    if j.saturation != 1.0 {
        for p in px.iter_mut() {
            if p[0] == p[1] && p[1] == p[2] {
                continue;
            }
            let g = luminance(*p);
            *p = p.map(|c| clamp(g + j.saturation * (c - g)));
        }
    }
    if j.hue != 0.0 {
        for p in px.iter_mut() {
            let (h, s, v) = rgb_to_hsv(*p);
            if s == 0.0 {
                continue;
            }
            *p = hsv_to_rgb((h + j.hue).rem_euclid(1.0), s, v);
        }
    }
    let mut pixels = Vec::with_capacity(px.len() * 3);
    for p in px {
        pixels.extend(p.map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    RgbTile::new(tile.width(), tile.height(), pixels).expect("dimensions unchanged")
}

/// Hue in `[0, 1)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    if max == 0.0 || d == 0.0 {
        return (0.0, 0.0, max);
    }
    let h = if max == r {
        ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    (h / 6.0, d / max, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h * 6.0).rem_euclid(6.0);
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u32 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patterned() -> RgbTile {
        RgbTile::from_fn(16, 16, |x, y| [(x * 16) as u8, (y * 16) as u8, ((x + y) * 8) as u8]).unwrap()
    }

    #[test]
    fn zero_ranges_are_identity() {
        let t = patterned();
        assert_eq!(colour_augment(&t, &AugmentParams::identity(3)).unwrap(), t);
    }

    #[test]
    fn same_seed_same_output() {
        let t = patterned();
        let p = AugmentParams { seed: 99, ..AugmentParams::default() };
        assert_eq!(colour_augment(&t, &p).unwrap(), colour_augment(&t, &p).unwrap());
        assert_ne!(colour_augment(&t, &p).unwrap(), colour_augment(&t, &p.with_seed(100)).unwrap());
    }

    #[test]
    fn gray_tile_ignores_hue_and_saturation() {
        let gray = RgbTile::from_fn(8, 8, |x, _| [(x * 30) as u8; 3]).unwrap();
        let p = AugmentParams {
            brightness_delta: 0.0,
            contrast_factor: (1.0, 1.0),
            saturation_factor: (0.1, 3.0),
            hue_shift: 0.5,
            seed: 5,
        };
        for s in 0..20 {
            assert_eq!(colour_augment(&gray, &p.with_seed(s)).unwrap(), gray);
        }
    }

    #[test]
    fn hsv_round_trip() {
        for p in [[0.2, 0.4, 0.9], [1.0, 0.0, 0.0], [0.5, 0.5, 0.1], [0.3, 0.3, 0.3]] {
            let (h, s, v) = rgb_to_hsv(p);
            let back = hsv_to_rgb(h, s, v);
            for c in 0..3 {
                assert!((back[c] - p[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_params() {
        let mut p = AugmentParams::default();
        p.hue_shift = 0.7;
        assert!(p.validate().is_err());
        p = AugmentParams { contrast_factor: (0.0, 1.0), ..AugmentParams::default() };
        assert!(p.validate().is_err());
    }
}
