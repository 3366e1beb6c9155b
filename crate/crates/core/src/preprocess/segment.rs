//! Saturation-based tissue segmentation.

use num_bigint::BigUint;

use super::{PreprocessError, RgbTile, TissueMask};

/// Static threshold used by the CLAM defaults: tissue is saturation > 8.
pub const DEFAULT_SATURATION_THRESHOLD: u8 = 8;

/// HSV saturation of one pixel on the 0..=255 scale, rounded half up.
#[inline]
pub fn pixel_saturation([r, g, b]: [u8; 3]) -> u8 {
    let max = r.max(g).max(b) as u32;
    let min = r.min(g).min(b) as u32;
    if max == 0 {
        return 0;
    }
    ((255 * (max - min) + max / 2) / max) as u8
}

/// Per-pixel saturation map, row-major.
pub fn saturation_channel(tile: &RgbTile) -> Vec<u8> {
    tile.iter_pixels().map(pixel_saturation).collect()
}

pub fn saturation_histogram(tile: &RgbTile) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for p in tile.iter_pixels() {
        hist[pixel_saturation(p) as usize] += 1;
    }
    hist
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    pub threshold: u8,
    /// Odd side length of a majority (binary median) filter; `None` disables it.
    pub median_kernel: Option<u32>,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { threshold: DEFAULT_SATURATION_THRESHOLD, median_kernel: None }
    }
}

/// Tissue wherever saturation exceeds `threshold`.
pub fn segment_tissue_fixed(tile: &RgbTile, threshold: u8) -> TissueMask {
    let data = tile.iter_pixels().map(|p| pixel_saturation(p) > threshold).collect();
    TissueMask::new(tile.width(), tile.height(), data).expect("same dimensions as tile")
}

pub fn segment_tissue(tile: &RgbTile, config: &SegmentConfig) -> Result<TissueMask, PreprocessError> {
    let mask = segment_tissue_fixed(tile, config.threshold);
    match config.median_kernel {
        None | Some(1) => Ok(mask),
        Some(k) => median_filter(&mask, k),
    }
}

/// Binary median filter: a pixel becomes tissue when more than half of the
/// in-bounds window is tissue; exact ties keep the original value.
pub fn median_filter(mask: &TissueMask, kernel: u32) -> Result<TissueMask, PreprocessError> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(PreprocessError::Parameter(format!("median kernel must be odd, got {kernel}")));
    }
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut integral = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += mask.data()[y * w + x] as u32;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let r = (kernel / 2) as usize;
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let on = integral[y1 * (w + 1) + x1] + integral[y0 * (w + 1) + x0]
                - integral[y0 * (w + 1) + x1]
                - integral[y1 * (w + 1) + x0];
            let total = ((y1 - y0) * (x1 - x0)) as u32;
            data.push(match (2 * on).cmp(&total) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => mask.data()[y * w + x],
            });
        }
    }
    TissueMask::new(mask.width(), mask.height(), data)
}

/// Otsu's threshold over a 256-bin histogram.
///
/// Splitting at `t` puts bins `0..=t` in the low class. The returned `t`
/// maximises between-class variance; ties go to the smallest `t`. The
/// comparison is exact: for total count `N`, total moment `S`, and the low
/// class's count `n0` and moment `S0`, the variance is proportional to
/// `(N·S0 − n0·S)² / (n0·(N − n0))`.
pub fn otsu_threshold(histogram: &[u64; 256]) -> Result<u8, PreprocessError> {
    let populated = histogram.iter().filter(|&&c| c > 0).count();
    if populated < 2 {
        return Err(PreprocessError::DegenerateHistogram);
    }
    let total: u128 = histogram.iter().map(|&c| c as u128).sum();
    let moment: u128 = histogram.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();

    let mut best_t = 0u8;
    // (numerator, denominator) of the best score so far; 0/1 means zero variance.
    let mut best: (BigUint, BigUint) = (BigUint::ZERO, BigUint::from(1u8));
    let (mut n0, mut s0) = (0u128, 0u128);
    for t in 0..255usize {
        n0 += histogram[t] as u128;
        s0 += t as u128 * histogram[t] as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let a = BigUint::from(total) * BigUint::from(s0);
        let b = BigUint::from(n0) * BigUint::from(moment);
        let diff = if a >= b { a - b } else { b - a };
        let num = &diff * &diff;
        let den = BigUint::from(n0) * BigUint::from(n1);
        if &num * &best.1 > &best.0 * &den {
            best = (num, den);
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// Otsu segmentation; `offset` shifts the computed threshold (clamped to 0..=255).
pub fn segment_tissue_otsu(tile: &RgbTile, offset: i32) -> Result<(TissueMask, u8), PreprocessError> {
    let t = otsu_threshold(&saturation_histogram(tile))?;
    let t = (t as i32 + offset).clamp(0, 255) as u8;
    Ok((segment_tissue_fixed(tile, t), t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_examples() {
        assert_eq!(pixel_saturation([120, 120, 120]), 0);
        assert_eq!(pixel_saturation([255, 0, 0]), 255);
        assert_eq!(pixel_saturation([200, 100, 50]), 191);
        assert_eq!(pixel_saturation([0, 0, 0]), 0);
    }

    #[test]
    fn half_gray_half_red() {
        let tile = RgbTile::from_fn(8, 4, |x, _| if x < 4 { [128, 128, 128] } else { [255, 0, 0] }).unwrap();
        let mask = segment_tissue_fixed(&tile, 8);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(mask.get(x, y), x >= 4);
            }
        }
        let gray = RgbTile::filled(5, 5, [200, 200, 200]).unwrap();
        assert_eq!(segment_tissue_fixed(&gray, 8).tissue_fraction(), 0.0);
    }

    #[test]
    fn otsu_examples() {
        let mut h = [0u64; 256];
        h[0] = 3;
        h[255] = 3;
        assert_eq!(otsu_threshold(&h).unwrap(), 0);

        let mut h = [0u64; 256];
        h[10] = 50;
        h[200] = 70;
        let t = otsu_threshold(&h).unwrap();
        assert!((10..200).contains(&t));

        let mut h = [0u64; 256];
        h[5] = 100;
        assert!(matches!(otsu_threshold(&h), Err(PreprocessError::DegenerateHistogram)));
    }

    #[test]
    fn median_filter_removes_speckle() {
        let mut data = vec![false; 25];
        data[12] = true;
        let mask = TissueMask::new(5, 5, data).unwrap();
        let out = median_filter(&mask, 3).unwrap();
        assert_eq!(out.tissue_fraction(), 0.0);
        assert!(median_filter(&mask, 2).is_err());
        let cfg = SegmentConfig { threshold: 8, median_kernel: Some(3) };
        let solid = RgbTile::filled(6, 6, [255, 0, 0]).unwrap();
        assert_eq!(segment_tissue(&solid, &cfg).unwrap().tissue_fraction(), 1.0);
    }
}
