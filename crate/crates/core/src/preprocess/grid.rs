use super::{PreprocessError, RgbTile, TissueMask};

/// Default minimum tissue fraction for a window to become a patch.
pub const DEFAULT_MIN_TISSUE_FRACTION: f64 = 0.5;

/// Top-left corners of every stride-aligned `patch_px` window lying fully
/// inside the mask whose tissue fraction is at least `min_tissue_fraction`.
/// Coordinates are `(x, y)` in row-major order.
pub fn patch_grid(
    mask: &TissueMask,
    patch_px: u32,
    stride_px: u32,
    min_tissue_fraction: f64,
) -> Result<Vec<(u32, u32)>, PreprocessError> {
    if patch_px == 0 || stride_px == 0 {
        return Err(PreprocessError::Geometry("patch and stride must be positive".into()));
    }
    if patch_px > mask.width() || patch_px > mask.height() {
        return Err(PreprocessError::Geometry(format!(
            "patch {patch_px}px exceeds mask {}×{}",
            mask.width(),
            mask.height()
        )));
    }
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut integral = vec![0u64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += mask.data()[y * w + x] as u64;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let p = patch_px as usize;
    let area = (p * p) as f64;
    let mut coords = Vec::new();
    for y0 in (0..=h - p).step_by(stride_px as usize) {
        for x0 in (0..=w - p).step_by(stride_px as usize) {
            let (x1, y1) = (x0 + p, y0 + p);
            let on = integral[y1 * (w + 1) + x1] + integral[y0 * (w + 1) + x0]
                - integral[y0 * (w + 1) + x1]
                - integral[y1 * (w + 1) + x0];
            if on as f64 / area >= min_tissue_fraction {
                coords.push((x0 as u32, y0 as u32));
            }
        }
    }
    Ok(coords)
}

/// Box-filter downsampling by an integer factor, rounding half up.
pub fn downsample(tile: &RgbTile, factor: u32) -> Result<RgbTile, PreprocessError> {
    if factor == 0 || tile.width() % factor != 0 || tile.height() % factor != 0 {
        return Err(PreprocessError::Geometry(format!(
            "factor {factor} does not divide {}×{}",
            tile.width(),
            tile.height()
        )));
    }
    let (ow, oh) = (tile.width() / factor, tile.height() / factor);
    let n = factor * factor;
    RgbTile::from_fn(ow, oh, |ox, oy| {
        let mut sum = [0u32; 3];
        for dy in 0..factor {
            for dx in 0..factor {
                let p = tile.pixel(ox * factor + dx, oy * factor + dy);
                for c in 0..3 {
                    sum[c] += p[c] as u32;
                }
            }
        }
        sum.map(|s| ((s + n / 2) / n) as u8)
    })
}
