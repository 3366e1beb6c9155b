use std::fmt;
use std::str::FromStr;

use super::{PredictionSet, StatsError};

/// Slide-level classification metrics, macro-averaged over classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    BalancedAccuracy,
    MacroAuroc,
    MacroF1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::BalancedAccuracy, Metric::MacroAuroc, Metric::MacroF1];

    pub fn key(self) -> &'static str {
        match self {
            Metric::BalancedAccuracy => "balanced_accuracy",
            Metric::MacroAuroc => "macro_auroc",
            Metric::MacroF1 => "macro_f1",
        }
    }

    pub fn compute(self, preds: &PredictionSet) -> Result<f64, StatsError> {
        match self {
            Metric::BalancedAccuracy => balanced_accuracy(preds),
            Metric::MacroAuroc => macro_auroc(preds),
            Metric::MacroF1 => macro_f1(preds),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Metric {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| StatsError::Input(format!("unknown metric `{s}`")))
    }
}

fn class_totals(preds: &PredictionSet) -> Vec<usize> {
    let mut n = vec![0; preds.k()];
    preds.truth().iter().for_each(|&t| n[t] += 1);
    n
}

fn require_all_classes(preds: &PredictionSet, what: &str) -> Result<Vec<usize>, StatsError> {
    let n = class_totals(preds);
    match n.iter().position(|&c| c == 0) {
        Some(c) => Err(StatsError::UndefinedMetric(format!("{what}: class {c} has no true examples"))),
        None => Ok(n),
    }
}

/// Mean per-class recall.
pub fn balanced_accuracy(preds: &PredictionSet) -> Result<f64, StatsError> {
    let n = require_all_classes(preds, "balanced accuracy")?;
    let mut hits = vec![0usize; preds.k()];
    for (&t, p) in preds.truth().iter().zip(preds.predicted()) {
        if t == p {
            hits[t] += 1;
        }
    }
    Ok(hits.iter().zip(&n).map(|(&h, &c)| h as f64 / c as f64).sum::<f64>() / preds.k() as f64)
}

/// Unweighted mean of per-class F1; a class with no true positives scores 0.
pub fn macro_f1(preds: &PredictionSet) -> Result<f64, StatsError> {
    let n = require_all_classes(preds, "macro F1")?;
    let k = preds.k();
    let (mut tp, mut predicted) = (vec![0usize; k], vec![0usize; k]);
    for (&t, p) in preds.truth().iter().zip(preds.predicted()) {
        predicted[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let f1 = (0..k).map(|c| {
        if tp[c] == 0 {
            return 0.0;
        }
        let precision = tp[c] as f64 / predicted[c] as f64;
        let recall = tp[c] as f64 / n[c] as f64;
        2.0 * precision * recall / (precision + recall)
    });
    Ok(f1.sum::<f64>() / k as f64)
}

/// One-vs-rest AUROC of `class` via the Mann–Whitney U statistic, ties
/// counted one half.
pub fn one_vs_rest_auroc(preds: &PredictionSet, class: usize) -> Result<f64, StatsError> {
    let mut scored: Vec<(f64, bool)> =
        preds.probs().iter().zip(preds.truth()).map(|(p, &t)| (p[class], t == class)).collect();
    let n_pos = scored.iter().filter(|s| s.1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(StatsError::UndefinedMetric(format!("AUROC: class {class} lacks positives or negatives")));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < scored.len() {
        let mut j = i;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        let midrank = (i + j + 1) as f64 / 2.0;
        rank_sum += midrank * scored[i..j].iter().filter(|s| s.1).count() as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

pub fn macro_auroc(preds: &PredictionSet) -> Result<f64, StatsError> {
    let mut total = 0.0;
    for c in 0..preds.k() {
        total += one_vs_rest_auroc(preds, c)?;
    }
    Ok(total / preds.k() as f64)
}
