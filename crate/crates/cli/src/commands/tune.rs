use std::fs::File;
use std::path::PathBuf;

use clap::Args;
use ovmil::feature_store::load_manifest;
use ovmil::orchestrator::{
    run_tuning, stratified_case_kfold, write_tuning_trace_csv, Dataset, HyperGrid, TrainingScorer, TuningSchedule,
};

use super::workers;
use crate::config::{display, owned, pick, pick_path, require_path, resolve_train_config, write_echo, ConfigFile, TrainFlags};
use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Schedule file (`n: name, name` lines) [default: the shipped 17 iterations].
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Candidate grid (`name = v1, v2` lines) [default: the shipped grid].
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Starting configuration.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn run(g: &GlobalArgs, args: TuneArgs) -> Result<(), CliError> {
    let mut file = ConfigFile::load(g.config.as_deref())?;
    let flags = TrainFlags { preset: args.preset, sets: args.sets, max_epochs: args.max_epochs, seed: g.seed };
    let (base, preset) = resolve_train_config(&mut file, &flags)?;
    let manifest = require_path(args.manifest, &mut file, "manifest")?;
    let schedule_path = pick_path(args.schedule, &mut file, "schedule");
    let grid_path = pick_path(args.grid, &mut file, "grid");
    let n_folds = pick(args.folds, &mut file, "n_folds", 5)?;
    let out = g.out.clone().or_else(|| file.take("out").map(PathBuf::from)).ok_or_else(|| CliError::Usage("missing --out".into()))?;
    let workers = workers(g, &mut file)?;
    file.finish()?;
    if n_folds < 2 {
        return Err(CliError::Usage("--folds must be at least 2".into()));
    }

    let schedule = match &schedule_path {
        Some(p) => TuningSchedule::parse(&read(p)?)?,
        None => TuningSchedule::default_schedule(),
    };
    let grid = match &grid_path {
        Some(p) => HyperGrid::parse(&read(p)?)?,
        None => HyperGrid::default_grid(),
    };
    for it in &schedule.iterations {
        if let Some(h) = it.iter().find(|h| !grid.values.contains_key(h)) {
            return Err(CliError::Usage(format!("grid has no candidates for {h}")));
        }
    }

    let mut echo = owned(base.pairs());
    echo.push(("n_folds".into(), n_folds.to_string()));
    if let Some(p) = preset {
        echo.push(("preset".into(), p));
    }
    echo.push(("manifest".into(), display(&manifest)));
    if let Some(p) = &schedule_path {
        echo.push(("schedule".into(), display(p)));
    }
    if let Some(p) = &grid_path {
        echo.push(("grid".into(), display(p)));
    }
    write_echo(&out, "tune_config.kv", &echo)?;

    let data = Dataset::load(load_manifest(&manifest)?)?;
    let folds = stratified_case_kfold(data.records(), n_folds, base.seed)?;
    let scorer = TrainingScorer { dataset: &data, folds: &folds };
    eprintln!("tuning over {} iterations with {workers} workers", schedule.iterations.len());
    let (best, trace) = run_tuning(&schedule, &grid, &base, &scorer, n_folds, workers)?;
    for it in &trace.iterations {
        match it.selected {
            Some(s) => eprintln!(
                "iteration {}: {} configurations, best mean val loss {:.6}",
                it.iteration,
                it.evaluated.len(),
                it.evaluated[s].mean_loss
            ),
            None => eprintln!("iteration {}: every configuration failed; keeping previous", it.iteration),
        }
    }
    let path = out.join("tuning_trace.csv");
    write_tuning_trace_csv(&trace, File::create(&path).map_err(|e| CliError::io(&path, e))?)?;
    write_echo(&out, "tuned_config.kv", &owned(best.pairs()))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
