use std::io::{Read, Write};

use super::StatsError;
use crate::{SubtypeLabel, NUM_CLASSES};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Per-slide true labels and class probabilities over `k` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    k: usize,
    slide_ids: Vec<String>,
    truth: Vec<usize>,
    probs: Vec<Vec<f64>>,
}

impl PredictionSet {
    pub fn new(k: usize, truth: Vec<usize>, probs: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let ids = (0..truth.len()).map(|i| i.to_string()).collect();
        Self::with_ids(k, ids, truth, probs)
    }

    pub fn with_ids(
        k: usize,
        slide_ids: Vec<String>,
        truth: Vec<usize>,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        if k < 2 {
            return Err(StatsError::Input(format!("need at least two classes, got {k}")));
        }
        if truth.is_empty() {
            return Err(StatsError::Input("prediction set is empty".into()));
        }
        if truth.len() != probs.len() || truth.len() != slide_ids.len() {
            return Err(StatsError::Input("ids, labels and probabilities differ in length".into()));
        }
        if let Some(t) = truth.iter().find(|&&t| t >= k) {
            return Err(StatsError::Input(format!("label {t} outside 0..{k}")));
        }
        if let Some(p) = probs.iter().find(|p| p.len() != k || p.iter().any(|v| !v.is_finite())) {
            return Err(StatsError::Input(format!("probability row {p:?} is not {k} finite values")));
        }
        Ok(PredictionSet { k, slide_ids, truth, probs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn slide_ids(&self) -> &[String] {
        &self.slide_ids
    }

    pub fn truth(&self) -> &[usize] {
        &self.truth
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn predicted(&self) -> Vec<usize> {
        self.probs.iter().map(|p| argmax(p)).collect()
    }

    /// Rows picked by index, repeats allowed.
    pub fn subset(&self, idx: &[usize]) -> PredictionSet {
        PredictionSet {
            k: self.k,
            slide_ids: idx.iter().map(|&i| self.slide_ids[i].clone()).collect(),
            truth: idx.iter().map(|&i| self.truth[i]).collect(),
            probs: idx.iter().map(|&i| self.probs[i].clone()).collect(),
        }
    }

    /// Concatenates sets over the same classes.
    pub fn concat(sets: &[PredictionSet]) -> Result<PredictionSet, StatsError> {
        let first = sets.first().ok_or_else(|| StatsError::Input("nothing to concatenate".into()))?;
        if sets.iter().any(|s| s.k != first.k) {
            return Err(StatsError::Input("prediction sets have different class counts".into()));
        }
        Ok(PredictionSet {
            k: first.k,
            slide_ids: sets.iter().flat_map(|s| s.slide_ids.clone()).collect(),
            truth: sets.iter().flat_map(|s| s.truth.clone()).collect(),
            probs: sets.iter().flat_map(|s| s.probs.clone()).collect(),
        })
    }

    /// Writes `slide_id,true_label,p0..p{k−1},predicted`. Five-class labels
    /// are written by subtype name, others by index.
    pub fn write_csv(&self, out: impl Write) -> Result<(), StatsError> {
        let name = |c: usize| match (self.k == NUM_CLASSES).then(|| SubtypeLabel::from_code(c)).flatten() {
            Some(l) => l.name().to_string(),
            None => c.to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["slide_id".to_string(), "true_label".to_string()];
        header.extend((0..self.k).map(|c| format!("p{c}")));
        header.push("predicted".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.slide_ids[i].clone(), name(self.truth[i])];
            row.extend(self.probs[i].iter().map(|p| p.to_string()));
            row.push(name(argmax(&self.probs[i])));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| StatsError::Csv(e.into()))?;
        Ok(())
    }

    /// Reads the format of [`PredictionSet::write_csv`]; the class count is
    /// taken from the `p*` columns and labels may be names or indices.
    pub fn read_csv(input: impl Read) -> Result<Self, StatsError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let k = header.iter().filter(|h| h.starts_with('p') && h[1..].parse::<usize>().is_ok()).count();
        let expected: Vec<String> = ["slide_id".to_string(), "true_label".to_string()]
            .into_iter()
            .chain((0..k).map(|c| format!("p{c}")))
            .chain(["predicted".to_string()])
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(StatsError::Input(format!("unexpected prediction header {:?}", header)));
        }
        let parse_label = |s: &str| -> Result<usize, StatsError> {
            if let Ok(c) = s.parse::<usize>() {
                return Ok(c);
            }
            s.parse::<SubtypeLabel>()
                .map(|l| l.code())
                .map_err(|_| StatsError::Input(format!("unknown label `{s}`")))
        };
        let (mut ids, mut truth, mut probs) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.records() {
            let row = row?;
            ids.push(row[0].to_string());
            truth.push(parse_label(&row[1])?);
            let p: Result<Vec<f64>, _> = (0..k).map(|c| row[2 + c].parse::<f64>()).collect();
            probs.push(p.map_err(|e| StatsError::Input(format!("probability: {e}")))?);
        }
        PredictionSet::with_ids(k, ids, truth, probs)
    }
}
