use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::tune::fold_config;
use super::{ensemble_predict, predict_bag, stratified_case_kfold, write_folds_csv, Dataset, FoldSplit, OrchestratorError};
use crate::abmil::{train_fold, write_checkpoint, write_history_csv, Checkpoint, TrainConfig, TrainOutcome};
use crate::kv::render_kv;
use crate::stats::{argmax, PredictionSet};
use crate::NUM_CLASSES;

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub n_folds: usize,
    pub workers: usize,
    /// Run directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Extra `key=value` pairs appended to `config.kv`.
    pub extra_config: Vec<(String, String)>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions { n_folds: 5, workers: 1, out_dir: None, extra_config: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub folds: Vec<FoldSplit>,
    pub outcomes: Vec<TrainOutcome>,
    /// Test-fold predictions of each fold's own model.
    pub fold_predictions: Vec<PredictionSet>,
    /// All test-fold predictions, in fold order.
    pub test_predictions: PredictionSet,
    /// Ensemble predictions per named hold-out set.
    pub holdout_predictions: Vec<(String, PredictionSet)>,
}

/// Cross-validated training: one model per fold, test-fold predictions from
/// each, and ensemble predictions on every hold-out set.
pub fn run_experiment(
    train: &Dataset,
    holdouts: &[(String, &Dataset)],
    config: &TrainConfig,
    options: &ExperimentOptions,
) -> Result<ExperimentResult, OrchestratorError> {
    config.validate()?;
    for (name, h) in holdouts {
        if h.dim() != train.dim() {
            return Err(OrchestratorError::Shape(format!(
                "hold-out {name} has feature dim {}, training set has {}",
                h.dim(),
                train.dim()
            )));
        }
        if name.is_empty() || name.contains(['/', '\\']) || name == "test" {
            return Err(OrchestratorError::Shape(format!("invalid hold-out name `{name}`")));
        }
    }
    let folds = stratified_case_kfold(train.records(), options.n_folds, config.seed)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| OrchestratorError::Runtime(e.to_string()))?;
    let outcomes = pool.install(|| {
        folds
            .par_iter()
            .map(|split| {
                let tr = train.samples_for(&split.train_cases);
                let va = train.samples_for(&split.val_cases);
                train_fold(&tr, &va, &fold_config(config, split.fold_index)).map_err(OrchestratorError::from)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let fold_predictions = folds
        .iter()
        .zip(&outcomes)
        .map(|(split, outcome)| {
            let idx: Vec<usize> =
                (0..train.len()).filter(|&i| split.test_cases.contains(&train.records()[i].case_id)).collect();
            let probs = idx
                .iter()
                .map(|&i| predict_bag(&outcome.params, &train.bags()[i]).map(|p| p.to_vec()))
                .collect::<Result<Vec<_>, _>>()?;
            prediction_set(train, &idx, probs)
        })
        .collect::<Result<Vec<_>, OrchestratorError>>()?;
    let test_predictions = PredictionSet::concat(&fold_predictions)?;

    let models: Vec<_> = outcomes.iter().map(|o| o.params.clone()).collect();
    let holdout_predictions = holdouts
        .iter()
        .map(|(name, h)| {
            let probs = pool.install(|| {
                h.bags().par_iter().map(|b| ensemble_predict(&models, b).map(|(p, _)| p.to_vec())).collect::<Result<Vec<_>, _>>()
            })?;
            let idx: Vec<usize> = (0..h.len()).collect();
            Ok((name.clone(), prediction_set(h, &idx, probs)?))
        })
        .collect::<Result<Vec<_>, OrchestratorError>>()?;

    let result = ExperimentResult { folds, outcomes, fold_predictions, test_predictions, holdout_predictions };
    if let Some(dir) = &options.out_dir {
        write_run_dir(dir, &result, config, options)?;
    }
    Ok(result)
}

fn prediction_set(data: &Dataset, idx: &[usize], probs: Vec<Vec<f64>>) -> Result<PredictionSet, OrchestratorError> {
    let ids = idx.iter().map(|&i| data.records()[i].slide_id.clone()).collect();
    let truth = idx.iter().map(|&i| data.records()[i].label.code()).collect();
    Ok(PredictionSet::with_ids(NUM_CLASSES, ids, truth, probs)?)
}

/// Ensemble argmax for each row of a prediction set.
pub fn ensemble_labels(preds: &PredictionSet) -> Vec<usize> {
    preds.probs().iter().map(|p| argmax(p)).collect()
}

fn create(path: &Path) -> Result<fs::File, OrchestratorError> {
    fs::File::create(path).map_err(|e| OrchestratorError::io(path, e))
}

fn write_run_dir(
    dir: &Path,
    result: &ExperimentResult,
    config: &TrainConfig,
    options: &ExperimentOptions,
) -> Result<(), OrchestratorError> {
    fs::create_dir_all(dir).map_err(|e| OrchestratorError::io(dir, e))?;
    let mut pairs = config.pairs();
    pairs.push(("n_folds", options.n_folds.to_string()));
    let mut text = render_kv(pairs);
    text.push_str(&render_kv(options.extra_config.iter().map(|(k, v)| (k.as_str(), v.clone()))));
    let path = dir.join("config.kv");
    fs::write(&path, text).map_err(|e| OrchestratorError::io(&path, e))?;

    write_folds_csv(&result.folds, create(&dir.join("folds.csv"))?)?;
    for (i, (outcome, preds)) in result.outcomes.iter().zip(&result.fold_predictions).enumerate() {
        let fold_dir = dir.join(format!("fold{i}"));
        fs::create_dir_all(&fold_dir).map_err(|e| OrchestratorError::io(&fold_dir, e))?;
        let ckpt = Checkpoint { params: outcome.params.clone(), config: fold_config(config, i) };
        write_checkpoint(&ckpt, fold_dir.join("checkpoint.abml"))?;
        write_history_csv(&outcome.history, create(&fold_dir.join("history.csv"))?)?;
        preds.write_csv(create(&fold_dir.join("predictions_test.csv"))?)?;
    }
    result.test_predictions.write_csv(create(&dir.join("predictions_test.csv"))?)?;
    for (name, preds) in &result.holdout_predictions {
        preds.write_csv(create(&dir.join(format!("predictions_{name}.csv")))?)?;
    }
    Ok(())
}
