use super::{PreprocessError, RgbTile};

/// ImageNet channel means, on the 0..1 scale.
pub const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
/// ImageNet channel standard deviations, on the 0..1 scale.
pub const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];

/// Real-valued `height × width × 3` array, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardisedTile {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

/// `(channel / 255 − mean) / std` per channel.
pub fn channel_standardise(tile: &RgbTile, means: [f64; 3], stds: [f64; 3]) -> Result<StandardisedTile, PreprocessError> {
    if stds.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(PreprocessError::Parameter(format!("standard deviations must be positive, got {stds:?}")));
    }
    let data = tile
        .pixels()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v as f64 / 255.0 - means[i % 3]) / stds[i % 3])
        .collect();
    Ok(StandardisedTile { width: tile.width(), height: tile.height(), data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_parameters_scale_to_unit_interval() {
        let t = RgbTile::new(1, 1, vec![0, 51, 255]).unwrap();
        let s = channel_standardise(&t, [0.0; 3], [1.0; 3]).unwrap();
        assert_eq!(s.data, vec![0.0, 0.2, 1.0]);
    }

    #[test]
    fn pixel_at_mean_maps_to_zero() {
        let t = RgbTile::new(1, 1, vec![51, 102, 153]).unwrap();
        let s = channel_standardise(&t, [0.2, 0.4, 0.6], [0.5, 0.5, 0.5]).unwrap();
        assert!(s.data.iter().all(|v| v.abs() < 1e-15));
        assert!(channel_standardise(&t, [0.0; 3], [1.0, 0.0, 1.0]).is_err());
    }
}
