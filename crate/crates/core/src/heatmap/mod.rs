//! Attention overlays: per-patch attention painted onto a downsampled canvas.
//!
//! Each canvas pixel stands for a `downsample × downsample` block of the
//! level-0 slide and is sampled at the block centre. A pixel's score is the
//! mean attention of every patch covering that point, so overlapping grids
//! blend smoothly. Scores are normalised to `[0, 1]`, mapped through a
//! colour ramp and either painted on white or blended over a background.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::abmil::{forward, AbmilError, AbmilParams, Mode};
use crate::kv::render_kv;
use crate::numeric::percentile;
use crate::preprocess::{PreprocessError, RgbTile};
use crate::FeatureBag;

mod viridis;

use viridis::VIRIDIS;

#[derive(Debug, thiserror::Error)]
pub enum HeatmapError {
    #[error("no patches to render")]
    EmptyBag,
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invalid heatmap spec: {0}")]
    Spec(String),
    #[error("invalid attention: {0}")]
    Attention(String),
    #[error(transparent)]
    Abmil(#[from] AbmilError),
    #[error(transparent)]
    Image(#[from] PreprocessError),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    Viridis,
    Gray,
}

impl Colormap {
    pub fn name(self) -> &'static str {
        match self {
            Colormap::Viridis => "viridis",
            Colormap::Gray => "gray",
        }
    }

    /// Colour for a normalised score in `[0, 1]`.
    pub fn map(self, v: f64) -> [u8; 3] {
        let i = (v.clamp(0.0, 1.0) * 255.0).round() as usize;
        match self {
            Colormap::Viridis => VIRIDIS[i],
            Colormap::Gray => [i as u8; 3],
        }
    }
}

impl FromStr for Colormap {
    type Err = HeatmapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "viridis" => Ok(Colormap::Viridis),
            "gray" | "grey" => Ok(Colormap::Gray),
            _ => Err(HeatmapError::Spec(format!("unknown colormap `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalisation {
    /// Clamp to the given percentiles of covered-pixel scores, then rescale.
    Percentile { low: f64, high: f64 },
    MinMax,
}

impl Default for Normalisation {
    fn default() -> Self {
        Normalisation::Percentile { low: 1.0, high: 99.0 }
    }
}

impl fmt::Display for Normalisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalisation::Percentile { low, high } => write!(f, "percentile:{low}:{high}"),
            Normalisation::MinMax => f.write_str("minmax"),
        }
    }
}

impl FromStr for Normalisation {
    type Err = HeatmapError;

    /// `minmax`, `percentile` (1/99) or `percentile:LOW:HIGH`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HeatmapError::Spec(format!("unknown normalisation `{s}`"));
        let mut parts = s.split(':');
        match parts.next().map(str::to_ascii_lowercase).as_deref() {
            Some("minmax") if parts.next().is_none() => Ok(Normalisation::MinMax),
            Some("percentile") => match (parts.next(), parts.next(), parts.next()) {
                (None, _, _) => Ok(Normalisation::default()),
                (Some(lo), Some(hi), None) => Ok(Normalisation::Percentile {
                    low: lo.parse().map_err(|_| bad())?,
                    high: hi.parse().map_err(|_| bad())?,
                }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

/// Rendering parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    /// Patch edge at level 0.
    pub patch_px: u32,
    /// Grid step at level 0; half the patch for 50% overlap.
    pub stride_px: u32,
    /// Level-0 pixels per canvas pixel along each axis.
    pub downsample: u32,
    pub colormap: Colormap,
    pub normalisation: Normalisation,
    /// Weight of the heatmap colour when blending over a background.
    pub opacity: f64,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        HeatmapSpec {
            patch_px: 256,
            stride_px: 128,
            downsample: 32,
            colormap: Colormap::Viridis,
            normalisation: Normalisation::default(),
            opacity: 0.5,
        }
    }
}

impl HeatmapSpec {
    pub fn validate(&self) -> Result<(), HeatmapError> {
        let err = |m: String| Err(HeatmapError::Spec(m));
        if self.patch_px == 0 || self.stride_px == 0 || self.downsample == 0 {
            return err("patch, stride and downsample must be positive".into());
        }
        if self.stride_px > self.patch_px || self.patch_px % self.stride_px != 0 {
            return err(format!("stride {} must divide patch size {}", self.stride_px, self.patch_px));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return err(format!("opacity {} outside [0, 1]", self.opacity));
        }
        if let Normalisation::Percentile { low, high } = self.normalisation {
            if !(0.0..=100.0).contains(&low) || !(0.0..=100.0).contains(&high) || low >= high {
                return err(format!("percentiles {low}/{high} must satisfy 0 ≤ low < high ≤ 100"));
            }
        }
        Ok(())
    }

    /// Canvas size for a level-0 slide of `slide_dims`.
    pub fn canvas_dims(&self, slide_dims: (u32, u32)) -> (u32, u32) {
        (slide_dims.0.div_ceil(self.downsample), slide_dims.1.div_ceil(self.downsample))
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("patch_px", self.patch_px.to_string()),
            ("stride_px", self.stride_px.to_string()),
            ("downsample", self.downsample.to_string()),
            ("colormap", self.colormap.name().to_string()),
            ("normalisation", self.normalisation.to_string()),
            ("opacity", self.opacity.to_string()),
        ]
    }
}

/// Summary of the attention distribution being drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionStats {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    /// Shannon entropy in nats.
    pub entropy: f64,
}

impl AttentionStats {
    pub fn of(attention: &[f64]) -> Self {
        let entropy = -attention.iter().filter(|&&a| a > 0.0).map(|&a| a * a.ln()).sum::<f64>();
        AttentionStats {
            n: attention.len(),
            min: attention.iter().copied().fold(f64::INFINITY, f64::min),
            max: attention.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            entropy,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Heatmap {
    pub image: RgbTile,
    /// Overlap-averaged raw score per canvas pixel, `None` where uncovered.
    pub scores: Vec<Option<f64>>,
    pub stats: AttentionStats,
}

impl Heatmap {
    pub fn score(&self, x: u32, y: u32) -> Option<f64> {
        self.scores[y as usize * self.image.width() as usize + x as usize]
    }
}

/// Canvas cells `[lo, hi)` whose sample point falls inside `[start, start + len)`.
fn covered_cells(start: u32, len: u32, ds: u32, cells: u32) -> (u32, u32) {
    let (start, end, ds, half) = (start as u64, start as u64 + len as u64, ds as u64, ds as u64 / 2);
    let first = |p: u64| if p <= half { 0 } else { (p - half).div_ceil(ds) };
    (first(start).min(cells as u64) as u32, first(end).min(cells as u64) as u32)
}

/// Paints `attention` at level-0 `coords` onto a canvas of the slide.
///
/// With a background (which must match the canvas size), covered pixels are
/// blended at `spec.opacity` and the rest keep the background; without one,
/// covered pixels take the full colour on white.
pub fn render_heatmap(
    coords: &[(u32, u32)],
    attention: &[f64],
    slide_dims: (u32, u32),
    spec: &HeatmapSpec,
    background: Option<&RgbTile>,
) -> Result<Heatmap, HeatmapError> {
    spec.validate()?;
    if attention.is_empty() {
        return Err(HeatmapError::EmptyBag);
    }
    if coords.len() != attention.len() {
        return Err(HeatmapError::Attention(format!("{} coords but {} attention values", coords.len(), attention.len())));
    }
    if attention.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(HeatmapError::Attention("values must be finite and non-negative".into()));
    }
    let total: f64 = attention.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(HeatmapError::Attention(format!("values sum to {total}, not 1")));
    }
    let (sw, sh) = slide_dims;
    if let Some(&(x, y)) = coords
        .iter()
        .find(|&&(x, y)| x as u64 + spec.patch_px as u64 > sw as u64 || y as u64 + spec.patch_px as u64 > sh as u64)
    {
        return Err(HeatmapError::Geometry(format!("patch at ({x}, {y}) leaves the {sw}×{sh} slide")));
    }
    let (cw, ch) = spec.canvas_dims(slide_dims);
    if let Some(bg) = background {
        if (bg.width(), bg.height()) != (cw, ch) {
            return Err(HeatmapError::Geometry(format!(
                "background is {}×{}, canvas is {cw}×{ch}",
                bg.width(),
                bg.height()
            )));
        }
    }

    // Accumulate in a content-defined order so sums do not depend on input order.
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| coords[a].cmp(&coords[b]).then(attention[a].total_cmp(&attention[b])));
    let n_px = cw as usize * ch as usize;
    let mut sum = vec![0.0f64; n_px];
    let mut count = vec![0u32; n_px];
    for i in order {
        let (x, y) = coords[i];
        let (x0, x1) = covered_cells(x, spec.patch_px, spec.downsample, cw);
        let (y0, y1) = covered_cells(y, spec.patch_px, spec.downsample, ch);
        for cy in y0..y1 {
            let row = cy as usize * cw as usize;
            for cx in x0..x1 {
                sum[row + cx as usize] += attention[i];
                count[row + cx as usize] += 1;
            }
        }
    }
    let scores: Vec<Option<f64>> =
        sum.iter().zip(&count).map(|(&s, &c)| (c > 0).then(|| s / c as f64)).collect();

    let covered: Vec<f64> = scores.iter().flatten().copied().collect();
    let (lo, hi) = match spec.normalisation {
        _ if covered.is_empty() => (0.0, 0.0),
        Normalisation::MinMax => (
            covered.iter().copied().fold(f64::INFINITY, f64::min),
            covered.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
        Normalisation::Percentile { low, high } => (percentile(&covered, low), percentile(&covered, high)),
    };
    let normalise = |s: f64| if hi > lo { (s.clamp(lo, hi) - lo) / (hi - lo) } else { 1.0 };

    let mut pixels = vec![255u8; n_px * 3];
    pixels.par_chunks_mut(cw as usize * 3).enumerate().for_each(|(cy, row)| {
        for cx in 0..cw as usize {
            let i = cy * cw as usize + cx;
            let bg = background.map(|b| b.pixel(cx as u32, cy as u32));
            let out = match (scores[i], bg) {
                (None, None) => [255; 3],
                (None, Some(b)) => b,
                (Some(s), None) => spec.colormap.map(normalise(s)),
                (Some(s), Some(b)) => {
                    let c = spec.colormap.map(normalise(s));
                    [0, 1, 2].map(|k| {
                        (spec.opacity * c[k] as f64 + (1.0 - spec.opacity) * b[k] as f64).round().clamp(0.0, 255.0) as u8
                    })
                }
            };
            row[cx * 3..cx * 3 + 3].copy_from_slice(&out);
        }
    });
    Ok(Heatmap { image: RgbTile::new(cw, ch, pixels)?, scores, stats: AttentionStats::of(attention) })
}

/// Runs `params` on `bag` without dropout and renders the resulting attention.
pub fn attention_heatmap(
    params: &AbmilParams,
    bag: &FeatureBag,
    slide_dims: (u32, u32),
    spec: &HeatmapSpec,
    background: Option<&RgbTile>,
) -> Result<Heatmap, HeatmapError> {
    if bag.n_patches() == 0 {
        return Err(HeatmapError::EmptyBag);
    }
    let out = forward(bag, params, Mode::Eval)?;
    render_heatmap(&bag.coords, &out.attention, slide_dims, spec, background)
}

/// Sidecar text: the spec, the slide and attention statistics, as `key=value`.
pub fn sidecar_text(slide_id: &str, spec: &HeatmapSpec, heatmap: &Heatmap, with_background: bool) -> String {
    let mut pairs = vec![("slide_id", slide_id.to_string())];
    pairs.extend(spec.pairs());
    pairs.extend([
        ("background", if with_background { "blended" } else { "white" }.to_string()),
        ("canvas_width", heatmap.image.width().to_string()),
        ("canvas_height", heatmap.image.height().to_string()),
        ("n_patches", heatmap.stats.n.to_string()),
        ("attention_min", heatmap.stats.min.to_string()),
        ("attention_max", heatmap.stats.max.to_string()),
        ("attention_entropy", heatmap.stats.entropy.to_string()),
    ]);
    render_kv(pairs)
}

/// Writes `<stem>.png` and `<stem>.txt` side by side.
pub fn write_heatmap(
    heatmap: &Heatmap,
    slide_id: &str,
    spec: &HeatmapSpec,
    with_background: bool,
    png_path: &Path,
) -> Result<(), HeatmapError> {
    heatmap.image.save_png(png_path)?;
    let txt = png_path.with_extension("txt");
    std::fs::write(&txt, sidecar_text(slide_id, spec, heatmap, with_background))
        .map_err(|source| HeatmapError::Io { path: txt, source })
}
