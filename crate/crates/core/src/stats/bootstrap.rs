use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Metric, PredictionSet, StatsError};
use crate::numeric::percentile_sorted;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Redraws allowed per iteration when a resample misses a class.
    pub max_retries: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { iterations: 10_000, seed: 0, max_retries: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEstimate {
    pub metric: Metric,
    /// Metric on the full prediction set.
    pub point: f64,
    pub boot_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub estimates: Vec<MetricEstimate>,
    pub iterations: usize,
    pub seed: u64,
    pub n: usize,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> Option<&MetricEstimate> {
        self.estimates.iter().find(|e| e.metric == metric)
    }
}

/// Index resample for one iteration. Each iteration has its own ChaCha
/// stream, so results do not depend on scheduling.
fn resample(preds: &PredictionSet, config: &BootstrapConfig, iteration: usize) -> Result<Vec<usize>, StatsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(iteration as u64);
    let n = preds.len();
    let k = preds.k();
    for _ in 0..=config.max_retries {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut seen = vec![false; k];
        idx.iter().for_each(|&i| seen[preds.truth()[i]] = true);
        if seen.iter().all(|&s| s) {
            return Ok(idx);
        }
    }
    Err(StatsError::DegenerateDataset(format!(
        "iteration {iteration}: every one of {} resamples missed a class",
        config.max_retries + 1
    )))
}

/// Percentile bootstrap (2.5th and 97.5th) for each metric. All metrics are
/// evaluated on the same resamples. When the resample mean falls outside the
/// percentile interval (heavily skewed distributions, or rounding when every
/// resample scores the same) the interval is widened to include it.
pub fn bootstrap_report(
    preds: &PredictionSet,
    metrics: &[Metric],
    config: &BootstrapConfig,
) -> Result<MetricReport, StatsError> {
    if config.iterations == 0 {
        return Err(StatsError::Input("bootstrap needs at least one iteration".into()));
    }
    let points: Vec<f64> = metrics.iter().map(|m| m.compute(preds)).collect::<Result<_, _>>()?;
    let samples: Vec<Vec<f64>> = (0..config.iterations)
        .into_par_iter()
        .map(|it| {
            let sub = preds.subset(&resample(preds, config, it)?);
            metrics.iter().map(|m| m.compute(&sub)).collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let estimates = metrics
        .iter()
        .enumerate()
        .map(|(j, &metric)| {
            let mut col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.sort_by(f64::total_cmp);
            let ci_low = percentile_sorted(&col, 2.5).min(mean);
            let ci_high = percentile_sorted(&col, 97.5).max(mean);
            MetricEstimate { metric, point: points[j], boot_mean: mean, ci_low, ci_high }
        })
        .collect();
    Ok(MetricReport { estimates, iterations: config.iterations, seed: config.seed, n: preds.len() })
}
