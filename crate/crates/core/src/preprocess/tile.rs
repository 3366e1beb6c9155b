use std::path::Path;

use super::PreprocessError;

/// An 8-bit RGB raster, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbTile {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbTile {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, PreprocessError> {
        if width == 0 || height == 0 {
            return Err(PreprocessError::Geometry(format!("empty tile {width}×{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(PreprocessError::Geometry(format!(
                "tile {width}×{height} needs {expected} channel values, got {}",
                pixels.len()
            )));
        }
        Ok(RgbTile { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, PreprocessError> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgb.iter().copied().cycle().take(n * 3).collect())
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> [u8; 3],
    ) -> Result<Self, PreprocessError> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn iter_pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn into_image(self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width, self.height, self.pixels).expect("dimensions checked at construction")
    }

    pub fn from_image(img: image::RgbImage) -> Result<Self, PreprocessError> {
        let (w, h) = img.dimensions();
        Self::new(w, h, img.into_raw())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self, PreprocessError> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| PreprocessError::Image(format!("{}: {e}", path.display())))?;
        Self::from_image(img.to_rgb8())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), PreprocessError> {
        let path = path.as_ref();
        self.clone()
            .into_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| PreprocessError::Image(format!("{}: {e}", path.display())))
    }
}

/// Binary per-pixel tissue/background map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TissueMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl TissueMask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self, PreprocessError> {
        if data.len() != width as usize * height as usize {
            return Err(PreprocessError::Geometry(format!(
                "mask {width}×{height} needs {} values, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(TissueMask { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        TissueMask { width, height, data: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn tissue_fraction(&self) -> f64 {
        self.data.iter().filter(|&&b| b).count() as f64 / self.data.len() as f64
    }

    /// Grayscale image: tissue 255, background 0.
    pub fn to_image(&self) -> image::GrayImage {
        let raw = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width, self.height, raw).expect("dimensions checked at construction")
    }

    /// Copy of `tile` with tissue boundaries drawn in green.
    pub fn outline_on(&self, tile: &RgbTile) -> Result<RgbTile, PreprocessError> {
        if tile.width() != self.width || tile.height() != self.height {
            return Err(PreprocessError::Geometry("mask and tile dimensions differ".into()));
        }
        let mut out = tile.clone();
        let (w, h) = (self.width as i64, self.height as i64);
        for y in 0..h {
            for x in 0..w {
                if !self.get(x as u32, y as u32) {
                    continue;
                }
                let edge = [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0 || ny < 0 || nx >= w || ny >= h || !self.get(nx as u32, ny as u32)
                });
                if edge {
                    out.set_pixel(x as u32, y as u32, [0, 255, 0]);
                }
            }
        }
        Ok(out)
    }
}
