use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ovmil::numeric::derive_seed;
use ovmil::preprocess::{
    colour_augment, lab_stats, macenko_normalise, patch_grid, reinhard_normalise, segment_tissue,
    segment_tissue_otsu, AugmentParams, LabStats, MacenkoConfig, MacenkoReference, RgbTile, SegmentConfig,
    DEFAULT_MIN_TISSUE_FRACTION, DEFAULT_SATURATION_THRESHOLD,
};
use rayon::prelude::*;

use super::{pool, workers};
use crate::config::{display, write_echo, ConfigFile};
use crate::error::{CliError, EXIT_IO};
use crate::GlobalArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Tissue masks, outline previews and optional patch grids.
    Segment,
    /// Stain normalisation.
    Normalise,
    /// Jittered colour copies.
    Augment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Reinhard,
    Macenko,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// A PNG tile or a directory of them.
    pub input: PathBuf,
    /// Output directory [default: --out].
    pub output: Option<PathBuf>,
    /// Saturation threshold on the 0..=255 scale.
    #[arg(long, default_value_t = DEFAULT_SATURATION_THRESHOLD)]
    pub threshold: u8,
    /// Choose the threshold per tile with Otsu's method instead.
    #[arg(long)]
    pub otsu: bool,
    /// Majority filter side length applied to fixed-threshold masks.
    #[arg(long)]
    pub median: Option<u32>,
    /// Also write the tissue patch grid for this patch size.
    #[arg(long)]
    pub patch_px: Option<u32>,
    /// Grid step for --patch-px [default: the patch size].
    #[arg(long)]
    pub stride_px: Option<u32>,
    #[arg(long, value_enum, default_value_t = Method::Macenko)]
    pub method: Method,
    /// Reference tile for normalisation (required for Reinhard).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Augmented copies per tile.
    #[arg(long, default_value_t = 5)]
    pub copies: usize,
}

enum Normaliser {
    Reinhard(LabStats),
    Macenko(MacenkoReference, MacenkoConfig),
}

fn list_tiles(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = std::fs::read_dir(input).map_err(|e| CliError::io(input, e))?;
    let mut tiles = Vec::new();
    for e in entries {
        let p = e.map_err(|e| CliError::io(input, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")) {
            tiles.push(p);
        }
    }
    tiles.sort();
    Ok(tiles)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

struct Job<'a> {
    args: &'a PreprocessArgs,
    out: &'a Path,
    normaliser: Option<&'a Normaliser>,
    seed: u64,
}

impl Job<'_> {
    fn process(&self, index: usize, path: &Path) -> Result<String, CliError> {
        let tile = RgbTile::load_png(path)?;
        let name = stem(path);
        let save = |t: &RgbTile, file: String| t.save_png(self.out.join(file)).map_err(CliError::from);
        match self.args.mode {
            Mode::Segment => {
                let (mask, threshold) = if self.args.otsu {
                    segment_tissue_otsu(&tile, 0)?
                } else {
                    let config = SegmentConfig { threshold: self.args.threshold, median_kernel: self.args.median };
                    (segment_tissue(&tile, &config)?, self.args.threshold)
                };
                let mask_path = self.out.join(format!("{name}_mask.png"));
                mask.to_image().save(&mask_path).map_err(|e| CliError::Io(format!("{}: {e}", mask_path.display())))?;
                save(&mask.outline_on(&tile)?, format!("{name}_outline.png"))?;
                let mut summary = format!("threshold {threshold}, tissue {:.1}%", 100.0 * mask.tissue_fraction());
                if let Some(p) = self.args.patch_px {
                    let coords = patch_grid(&mask, p, self.args.stride_px.unwrap_or(p), DEFAULT_MIN_TISSUE_FRACTION)?;
                    let mut csv = String::from("x,y\n");
                    for (x, y) in &coords {
                        let _ = writeln!(csv, "{x},{y}");
                    }
                    let grid_path = self.out.join(format!("{name}_patches.csv"));
                    std::fs::write(&grid_path, csv).map_err(|e| CliError::io(&grid_path, e))?;
                    let _ = write!(summary, ", {} patches", coords.len());
                }
                Ok(summary)
            }
            Mode::Normalise => {
                let normalised = match self.normaliser.expect("normaliser built for this mode") {
                    Normaliser::Reinhard(target) => reinhard_normalise(&tile, target)?,
                    Normaliser::Macenko(reference, config) => macenko_normalise(&tile, reference, config)?,
                };
                save(&normalised, format!("{name}.png"))?;
                Ok("normalised".into())
            }
            Mode::Augment => {
                let tile_seed = derive_seed(self.seed, index as u64);
                for j in 0..self.args.copies {
                    let params = AugmentParams::default().with_seed(derive_seed(tile_seed, j as u64));
                    save(&colour_augment(&tile, &params)?, format!("{name}_aug{j:03}.png"))?;
                }
                Ok(format!("{} copies", self.args.copies))
            }
        }
    }
}

pub fn run(g: &GlobalArgs, args: PreprocessArgs) -> Result<(), CliError> {
    let mut file = ConfigFile::load(g.config.as_deref())?;
    let seed = crate::config::pick(g.seed, &mut file, "seed", 0)?;
    let workers = workers(g, &mut file)?;
    let out = args
        .output
        .clone()
        .or_else(|| g.out.clone())
        .or_else(|| file.take("out").map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("missing output directory".into()))?;
    file.finish()?;
    if args.mode == Mode::Normalise && args.method == Method::Reinhard && args.reference.is_none() {
        return Err(CliError::Usage("Reinhard normalisation needs --reference".into()));
    }
    if args.median.is_some_and(|k| k % 2 == 0) {
        return Err(CliError::Usage("--median must be odd".into()));
    }
    if !args.input.exists() {
        return Err(CliError::Io(format!("{}: no such file or directory", args.input.display())));
    }

    let normaliser = match (args.mode, args.method) {
        (Mode::Normalise, Method::Reinhard) => {
            Some(Normaliser::Reinhard(lab_stats(&RgbTile::load_png(args.reference.as_ref().expect("checked"))?)))
        }
        (Mode::Normalise, Method::Macenko) => {
            let config = MacenkoConfig::default();
            let reference = match &args.reference {
                Some(r) => MacenkoReference::from_tile(&RgbTile::load_png(r)?, &config)?,
                None => MacenkoReference::default(),
            };
            Some(Normaliser::Macenko(reference, config))
        }
        _ => None,
    };

    let mut echo = vec![
        ("mode".to_string(), format!("{:?}", args.mode).to_lowercase()),
        ("input".to_string(), display(&args.input)),
        ("seed".to_string(), seed.to_string()),
    ];
    match args.mode {
        Mode::Segment => {
            echo.push(("threshold".into(), if args.otsu { "otsu".into() } else { args.threshold.to_string() }));
            if let Some(k) = args.median {
                echo.push(("median".into(), k.to_string()));
            }
            if let Some(p) = args.patch_px {
                echo.push(("patch_px".into(), p.to_string()));
                echo.push(("stride_px".into(), args.stride_px.unwrap_or(p).to_string()));
            }
        }
        Mode::Normalise => {
            echo.push(("method".into(), format!("{:?}", args.method).to_lowercase()));
            echo.push(("reference".into(), args.reference.as_deref().map_or("builtin".into(), display)));
        }
        Mode::Augment => echo.push(("copies".into(), args.copies.to_string())),
    }
    write_echo(&out, "preprocess_config.kv", &echo)?;

    let tiles = list_tiles(&args.input)?;
    if tiles.is_empty() {
        eprintln!("warning: no PNG tiles in {}", args.input.display());
        return Ok(());
    }
    let job = Job { args: &args, out: &out, normaliser: normaliser.as_ref(), seed };
    let results: Vec<Result<String, CliError>> =
        pool(workers)?.install(|| tiles.par_iter().enumerate().map(|(i, p)| job.process(i, p)).collect());

    let mut failures = Vec::new();
    for (path, r) in tiles.iter().zip(results) {
        match r {
            Ok(summary) => println!("{}\t{summary}", path.display()),
            Err(e) => {
                eprintln!("{}\terror: {e}", path.display());
                failures.push(e);
            }
        }
    }
    match failures.len() {
        0 => Ok(()),
        n => {
            let msg = format!("{n} of {} tiles failed", tiles.len());
            if failures.iter().any(|e| e.exit_code() == EXIT_IO) {
                Err(CliError::Io(msg))
            } else {
                Err(CliError::Runtime(msg))
            }
        }
    }
}
