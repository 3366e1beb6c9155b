use std::path::PathBuf;

use clap::Args;
use ovmil::feature_store::load_manifest;
use ovmil::orchestrator::{run_experiment, Dataset, ExperimentOptions};

use super::workers;
use crate::config::{display, pick, require_path, resolve_train_config, ConfigFile, TrainFlags};
use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Training manifest CSV.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Hold-out manifest as NAME=PATH; predictions land in predictions_NAME.csv.
    #[arg(long = "holdout", value_name = "NAME=PATH")]
    pub holdouts: Vec<String>,
    /// Named final configuration to start from.
    #[arg(long)]
    pub preset: Option<String>,
    /// Hyperparameter override as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Cross-validation folds [default: 5].
    #[arg(long)]
    pub folds: Option<usize>,
}

pub(crate) fn parse_holdout(s: &str) -> Result<(String, PathBuf), CliError> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--holdout expects NAME=PATH, got `{s}`")))?;
    if name.is_empty() || name.contains(['/', '\\', '.']) || name == "test" {
        return Err(CliError::Usage(format!("invalid hold-out name `{name}`")));
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

pub fn run(g: &GlobalArgs, args: TrainArgs) -> Result<(), CliError> {
    let mut file = ConfigFile::load(g.config.as_deref())?;
    let flags = TrainFlags { preset: args.preset, sets: args.sets, max_epochs: args.max_epochs, seed: g.seed };
    let (config, preset) = resolve_train_config(&mut file, &flags)?;
    let manifest = require_path(args.manifest, &mut file, "manifest")?;
    let n_folds = pick(args.folds, &mut file, "n_folds", 5)?;
    let out = g.out.clone().or_else(|| file.take("out").map(PathBuf::from)).ok_or_else(|| CliError::Usage("missing --out".into()))?;
    let workers = workers(g, &mut file)?;
    let mut holdouts: Vec<(String, PathBuf)> =
        file.take_prefixed("holdout.").into_iter().map(|(n, p)| (n, PathBuf::from(p))).collect();
    for h in &args.holdouts {
        let (name, path) = parse_holdout(h)?;
        holdouts.retain(|(n, _)| *n != name);
        holdouts.push((name, path));
    }
    holdouts.sort();
    file.finish()?;
    if n_folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }

    eprintln!("loading {}", manifest.display());
    let train = Dataset::load(load_manifest(&manifest)?)?;
    let holdout_sets = holdouts
        .iter()
        .map(|(n, p)| Ok((n.clone(), Dataset::load(load_manifest(p)?)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let borrowed: Vec<(String, &Dataset)> = holdout_sets.iter().map(|(n, d)| (n.clone(), d)).collect();

    let mut extra = Vec::new();
    if let Some(p) = preset {
        extra.push(("preset".to_string(), p));
    }
    extra.push(("manifest".to_string(), display(&manifest)));
    for (n, p) in &holdouts {
        extra.push((format!("holdout.{n}"), display(p)));
    }
    let options = ExperimentOptions { n_folds, workers, out_dir: Some(out.clone()), extra_config: extra };
    eprintln!("training {n_folds} folds on {} slides with {workers} workers", train.len());
    let result = run_experiment(&train, &borrowed, &config, &options)?;
    for (i, o) in result.outcomes.iter().enumerate() {
        eprintln!("fold {i}: best epoch {} val loss {:.6}", o.best_epoch, o.best_val_loss);
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}
