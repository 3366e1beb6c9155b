use std::collections::BTreeMap;

use super::OrchestratorError;
use crate::abmil::{Hyperparameter, TrainConfig};
use crate::kv::parse_kv;

const DEFAULT_SCHEDULE: &str = include_str!("default_schedule.txt");
const DEFAULT_GRID: &str = include_str!("default_grid.kv");

/// Largest number of hyperparameters one iteration may tune jointly.
pub const MAX_ACTIVE: usize = 6;

/// Ordered tuning iterations, each naming the hyperparameters it adjusts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuningSchedule {
    pub iterations: Vec<Vec<Hyperparameter>>,
}

impl TuningSchedule {
    /// The shipped 17-iteration schedule.
    pub fn default_schedule() -> Self {
        Self::parse(DEFAULT_SCHEDULE).expect("shipped schedule is valid")
    }

    /// Parses lines of the form `3: beta1, beta2`. Iterations must be
    /// numbered consecutively from 1; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let err = |line: usize, msg: String| OrchestratorError::Schedule(format!("line {line}: {msg}"));
        let mut iterations = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (num, names) = line.split_once(':').ok_or_else(|| err(i + 1, "expected `n: names`".into()))?;
            let n: usize = num.trim().parse().map_err(|_| err(i + 1, format!("bad iteration number `{num}`")))?;
            if n != iterations.len() + 1 {
                return Err(err(i + 1, format!("expected iteration {}, found {n}", iterations.len() + 1)));
            }
            let mut active = Vec::new();
            for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let h: Hyperparameter = name.parse().map_err(|e| err(i + 1, format!("{e}")))?;
                if active.contains(&h) {
                    return Err(err(i + 1, format!("{h} listed twice")));
                }
                active.push(h);
            }
            if active.is_empty() || active.len() > MAX_ACTIVE {
                return Err(err(i + 1, format!("{} hyperparameters active, need 1..={MAX_ACTIVE}", active.len())));
            }
            iterations.push(active);
        }
        if iterations.is_empty() {
            return Err(OrchestratorError::Schedule("schedule has no iterations".into()));
        }
        Ok(TuningSchedule { iterations })
    }

    pub fn render(&self) -> String {
        self.iterations
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{}: {}\n", i + 1, a.iter().map(|h| h.key()).collect::<Vec<_>>().join(", ")))
            .collect()
    }
}

/// Candidate values per hyperparameter, kept in text form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperGrid {
    pub values: BTreeMap<Hyperparameter, Vec<String>>,
}

impl HyperGrid {
    pub fn default_grid() -> Self {
        Self::parse(DEFAULT_GRID).expect("shipped grid is valid")
    }

    /// Parses `name = v1, v2, …` lines. Every value must be valid on its own
    /// against the default configuration.
    pub fn parse(text: &str) -> Result<Self, OrchestratorError> {
        let map = parse_kv(text).map_err(|e| OrchestratorError::Grid(e.to_string()))?;
        let mut values = BTreeMap::new();
        for (k, v) in map {
            let h: Hyperparameter = k.parse().map_err(|e| OrchestratorError::Grid(format!("{e}")))?;
            let list: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if list.is_empty() {
                return Err(OrchestratorError::Grid(format!("{h} has no candidate values")));
            }
            for item in &list {
                let mut probe = TrainConfig::default();
                probe.set(h, item).map_err(|e| OrchestratorError::Grid(e.to_string()))?;
                probe.validate().map_err(|e| OrchestratorError::Grid(format!("{h} = {item}: {e}")))?;
            }
            values.insert(h, list);
        }
        Ok(HyperGrid { values })
    }

    /// Every combination of the active hyperparameters' candidates applied
    /// to `base`; the last active name varies fastest.
    pub fn expand(&self, active: &[Hyperparameter], base: &TrainConfig) -> Result<Vec<TrainConfig>, OrchestratorError> {
        let mut configs = vec![base.clone()];
        for &h in active {
            let candidates = self
                .values
                .get(&h)
                .ok_or_else(|| OrchestratorError::Grid(format!("no candidate values for {h}")))?;
            let mut next = Vec::with_capacity(configs.len() * candidates.len());
            for cfg in &configs {
                for v in candidates {
                    let mut c = cfg.clone();
                    c.set(h, v)?;
                    next.push(c);
                }
            }
            configs = next;
        }
        Ok(configs)
    }
}
