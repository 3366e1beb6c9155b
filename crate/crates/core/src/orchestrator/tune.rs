use std::io::Write;

use rayon::prelude::*;

use super::{Dataset, FoldSplit, HyperGrid, OrchestratorError, TuningSchedule};
use crate::abmil::{train_fold, Hyperparameter, TrainConfig};
use crate::numeric::derive_seed;

/// Scores a configuration on one fold; lower is better.
pub trait ConfigScorer: Sync {
    fn score(&self, config: &TrainConfig, fold: usize) -> Result<f64, String>;
}

/// Trains on each fold's training cases and reports the best validation loss.
pub struct TrainingScorer<'a> {
    pub dataset: &'a Dataset,
    pub folds: &'a [FoldSplit],
}

/// Training config for fold `fold`: the run seed split into a child stream.
pub fn fold_config(config: &TrainConfig, fold: usize) -> TrainConfig {
    TrainConfig { seed: derive_seed(config.seed, fold as u64), ..config.clone() }
}

impl ConfigScorer for TrainingScorer<'_> {
    fn score(&self, config: &TrainConfig, fold: usize) -> Result<f64, String> {
        let split = &self.folds[fold];
        let train = self.dataset.samples_for(&split.train_cases);
        let val = self.dataset.samples_for(&split.val_cases);
        train_fold(&train, &val, &fold_config(config, fold)).map(|o| o.best_val_loss).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedConfig {
    pub config: TrainConfig,
    /// Per-fold loss; failed folds are `+∞`.
    pub fold_losses: Vec<f64>,
    /// Mean over folds, `+∞` if any fold failed.
    pub mean_loss: f64,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub active: Vec<Hyperparameter>,
    pub evaluated: Vec<EvaluatedConfig>,
    /// Index of the carried-forward config, `None` when every candidate failed.
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TuningTrace {
    pub iterations: Vec<IterationTrace>,
}

/// Runs the schedule: each iteration evaluates the grid over its active
/// hyperparameters with everything else frozen at the current best, and
/// carries the lowest mean loss forward (earliest candidate on ties).
///
/// Scoring jobs run on a pool of `workers` threads; results do not depend
/// on the worker count.
pub fn run_tuning(
    schedule: &TuningSchedule,
    grid: &HyperGrid,
    base: &TrainConfig,
    scorer: &dyn ConfigScorer,
    n_folds: usize,
    workers: usize,
) -> Result<(TrainConfig, TuningTrace), OrchestratorError> {
    base.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| OrchestratorError::Runtime(e.to_string()))?;
    let mut current = base.clone();
    let mut trace = TuningTrace::default();
    for (i, active) in schedule.iterations.iter().enumerate() {
        let configs = grid.expand(active, &current)?;
        let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..n_folds).map(move |f| (c, f))).collect();
        let results: Vec<Result<f64, String>> = pool.install(|| {
            jobs.par_iter()
                .map(|&(c, f)| match configs[c].validate() {
                    Ok(()) => scorer.score(&configs[c], f),
                    Err(e) => Err(e.to_string()),
                })
                .collect()
        });
        let evaluated: Vec<EvaluatedConfig> = configs
            .into_iter()
            .enumerate()
            .map(|(c, config)| {
                let mut errors = Vec::new();
                let fold_losses: Vec<f64> = results[c * n_folds..(c + 1) * n_folds]
                    .iter()
                    .map(|r| match r {
                        Ok(l) if l.is_finite() => *l,
                        Ok(l) => {
                            errors.push(format!("non-finite loss {l}"));
                            f64::INFINITY
                        }
                        Err(e) => {
                            errors.push(e.clone());
                            f64::INFINITY
                        }
                    })
                    .collect();
                let mean_loss = if errors.is_empty() {
                    fold_losses.iter().sum::<f64>() / n_folds as f64
                } else {
                    f64::INFINITY
                };
                EvaluatedConfig { config, fold_losses, mean_loss, errors }
            })
            .collect();

        let mut selected = None;
        for (c, e) in evaluated.iter().enumerate() {
            if e.mean_loss.is_finite() && selected.map_or(true, |s: usize| e.mean_loss < evaluated[s].mean_loss) {
                selected = Some(c);
            }
        }
        if let Some(s) = selected {
            current = evaluated[s].config.clone();
        }
        trace.iterations.push(IterationTrace { iteration: i + 1, active: active.clone(), evaluated, selected });
    }
    Ok((current, trace))
}

/// `iteration,candidate,settings,mean_val_loss,fold_losses,selected`, where
/// `settings` lists the active hyperparameters as `name=value;…`.
pub fn write_tuning_trace_csv(trace: &TuningTrace, out: impl Write) -> Result<(), OrchestratorError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "candidate", "settings", "mean_val_loss", "fold_losses", "selected"])?;
    for it in &trace.iterations {
        for (c, e) in it.evaluated.iter().enumerate() {
            let settings: Vec<String> = it.active.iter().map(|&h| format!("{}={}", h, e.config.get(h))).collect();
            let folds: Vec<String> = e.fold_losses.iter().map(|l| l.to_string()).collect();
            w.write_record([
                it.iteration.to_string(),
                c.to_string(),
                settings.join(";"),
                e.mean_loss.to_string(),
                folds.join(";"),
                (it.selected == Some(c)).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| OrchestratorError::Csv(e.into()))?;
    Ok(())
}
