use std::path::PathBuf;

use clap::Args;
use ovmil::abmil::read_checkpoint;
use ovmil::feature_store::read_feature_bag;
use ovmil::heatmap::{attention_heatmap, write_heatmap, Colormap, HeatmapSpec, Normalisation};
use ovmil::preprocess::RgbTile;

use crate::config::{display, pick, require_path, write_echo, ConfigFile};
use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    /// Trained model (`checkpoint.abml`).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Feature bag of the slide.
    #[arg(long)]
    pub bag: Option<PathBuf>,
    /// Level-0 slide size as WIDTHxHEIGHT [default: extent of the patches].
    #[arg(long)]
    pub slide_dims: Option<String>,
    /// PNG at canvas size to blend over.
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Patch edge at level 0 [default: from the bag].
    #[arg(long)]
    pub patch_px: Option<u32>,
    /// Grid step at level 0 [default: half the patch].
    #[arg(long)]
    pub stride_px: Option<u32>,
    #[arg(long)]
    pub downsample: Option<u32>,
    #[arg(long)]
    pub colormap: Option<String>,
    /// `percentile`, `percentile:LOW:HIGH` or `minmax`.
    #[arg(long)]
    pub normalisation: Option<String>,
    #[arg(long)]
    pub opacity: Option<f64>,
}

fn parse_dims(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::Usage(format!("slide dims must look like 4096x3072, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

pub fn run(g: &GlobalArgs, args: HeatmapArgs) -> Result<(), CliError> {
    let mut file = ConfigFile::load(g.config.as_deref())?;
    let checkpoint = require_path(args.checkpoint, &mut file, "checkpoint")?;
    let bag_path = require_path(args.bag, &mut file, "bag")?;
    let background = crate::config::pick_path(args.background, &mut file, "background");
    let dims_text = args.slide_dims.or_else(|| file.take("slide_dims"));
    let defaults = HeatmapSpec::default();
    let patch_flag = args.patch_px.or(file.take_parsed("patch_px")?);
    let stride_flag = args.stride_px.or(file.take_parsed("stride_px")?);
    let downsample = pick(args.downsample, &mut file, "downsample", defaults.downsample)?;
    let colormap: Colormap = pick(args.colormap, &mut file, "colormap", "viridis".into())?.parse()?;
    let normalisation: Normalisation =
        pick(args.normalisation, &mut file, "normalisation", defaults.normalisation.to_string())?.parse()?;
    let opacity = pick(args.opacity, &mut file, "opacity", defaults.opacity)?;
    let out = g.out.clone().or_else(|| file.take("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    file.finish()?;

    let model = read_checkpoint(&checkpoint)?;
    let bag = read_feature_bag(&bag_path)?;
    let patch_px = patch_flag.unwrap_or(bag.patch_size_px);
    let stride_px = stride_flag.unwrap_or(if patch_px % 2 == 0 { patch_px / 2 } else { patch_px });
    let spec = HeatmapSpec { patch_px, stride_px, downsample, colormap, normalisation, opacity };
    spec.validate()?;
    let slide_dims = match &dims_text {
        Some(s) => parse_dims(s)?,
        None => bag.coords.iter().fold((0, 0), |(w, h), &(x, y)| (w.max(x + patch_px), h.max(y + patch_px))),
    };
    let bg = background.as_ref().map(RgbTile::load_png).transpose()?;
    let heatmap = attention_heatmap(&model.params, &bag, slide_dims, &spec, bg.as_ref())?;

    let mut echo = vec![
        ("checkpoint".to_string(), display(&checkpoint)),
        ("bag".to_string(), display(&bag_path)),
        ("slide_dims".to_string(), format!("{}x{}", slide_dims.0, slide_dims.1)),
    ];
    if let Some(b) = &background {
        echo.push(("background".to_string(), display(b)));
    }
    echo.extend(spec.pairs().into_iter().map(|(k, v)| (k.to_string(), v)));
    write_echo(&out, "heatmap_config.kv", &echo)?;
    let png = out.join(format!("{}_heatmap.png", bag.slide_id));
    write_heatmap(&heatmap, &bag.slide_id, &spec, bg.is_some(), &png)?;
    println!(
        "{}\t{} patches\tattention [{:.3e}, {:.3e}]\tentropy {:.4}",
        png.display(),
        heatmap.stats.n,
        heatmap.stats.min,
        heatmap.stats.max,
        heatmap.stats.entropy
    );
    Ok(())
}
