use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::AbmilError;
use crate::kv::{parse_kv, render_kv};

/// The ten tunable hyperparameters, in tuning-table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hyperparameter {
    LearningRate,
    WeightDecay,
    Beta1,
    Beta2,
    Epsilon,
    LrDecayPatience,
    LrDecayFactor,
    ModelSize,
    Dropout,
    MaxPatches,
}

impl Hyperparameter {
    pub const ALL: [Hyperparameter; 10] = [
        Hyperparameter::LearningRate,
        Hyperparameter::WeightDecay,
        Hyperparameter::Beta1,
        Hyperparameter::Beta2,
        Hyperparameter::Epsilon,
        Hyperparameter::LrDecayPatience,
        Hyperparameter::LrDecayFactor,
        Hyperparameter::ModelSize,
        Hyperparameter::Dropout,
        Hyperparameter::MaxPatches,
    ];

    /// Key used in config files, schedules and grids.
    pub fn key(self) -> &'static str {
        match self {
            Hyperparameter::LearningRate => "learning_rate",
            Hyperparameter::WeightDecay => "weight_decay",
            Hyperparameter::Beta1 => "beta1",
            Hyperparameter::Beta2 => "beta2",
            Hyperparameter::Epsilon => "epsilon",
            Hyperparameter::LrDecayPatience => "lr_decay_patience",
            Hyperparameter::LrDecayFactor => "lr_decay_factor",
            Hyperparameter::ModelSize => "model_size",
            Hyperparameter::Dropout => "dropout",
            Hyperparameter::MaxPatches => "max_patches",
        }
    }
}

impl fmt::Display for Hyperparameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Hyperparameter {
    type Err = AbmilError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Hyperparameter::ALL
            .into_iter()
            .find(|h| h.key() == s)
            .ok_or_else(|| AbmilError::Config(format!("unknown hyperparameter `{s}`")))
    }
}

/// Optimiser, regularisation and schedule settings for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lr_decay_patience: usize,
    pub lr_decay_factor: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f64,
    /// Parameter dropout on the projected patch features.
    pub dropout: f64,
    /// Data dropout: patches kept per training step.
    pub max_patches: usize,
    /// `(m1, m2)`: projection width and attention width.
    pub model_size: (usize, usize),
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-4,
            lr_decay_patience: 20,
            lr_decay_factor: 0.75,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-5,
            dropout: 0.25,
            max_patches: 1000,
            model_size: (512, 256),
            max_epochs: 100,
            seed: 0,
        }
    }
}

pub fn format_model_size((m1, m2): (usize, usize)) -> String {
    format!("{m1}x{m2}")
}

pub fn parse_model_size(s: &str) -> Result<(usize, usize), AbmilError> {
    let bad = || AbmilError::Config(format!("model_size must look like 512x128, got `{s}`"));
    let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let m1 = a.trim().parse().map_err(|_| bad())?;
    let m2 = b.trim().parse().map_err(|_| bad())?;
    Ok((m1, m2))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, AbmilError> {
    value.trim().parse().map_err(|_| AbmilError::Config(format!("{key}: cannot parse `{value}`")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AbmilError> {
        let mut problems = Vec::new();
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push("learning_rate must be positive");
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            problems.push("lr_decay_factor must lie in (0, 1]");
        }
        if !open01(self.beta1) {
            problems.push("beta1 must lie in (0, 1)");
        }
        if !open01(self.beta2) {
            problems.push("beta2 must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            problems.push("epsilon must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            problems.push("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push("dropout must lie in [0, 1)");
        }
        if self.max_patches == 0 {
            problems.push("max_patches must be at least 1");
        }
        if self.model_size.0 == 0 || self.model_size.1 == 0 {
            problems.push("model_size widths must be positive");
        }
        if self.max_epochs == 0 {
            problems.push("max_epochs must be at least 1");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AbmilError::Config(problems.join("; ")))
        }
    }

    /// Sets one hyperparameter from its text form.
    pub fn set(&mut self, h: Hyperparameter, value: &str) -> Result<(), AbmilError> {
        let key = h.key();
        match h {
            Hyperparameter::LearningRate => self.learning_rate = parse_num(key, value)?,
            Hyperparameter::WeightDecay => self.weight_decay = parse_num(key, value)?,
            Hyperparameter::Beta1 => self.beta1 = parse_num(key, value)?,
            Hyperparameter::Beta2 => self.beta2 = parse_num(key, value)?,
            Hyperparameter::Epsilon => self.epsilon = parse_num(key, value)?,
            Hyperparameter::LrDecayPatience => self.lr_decay_patience = parse_num(key, value)?,
            Hyperparameter::LrDecayFactor => self.lr_decay_factor = parse_num(key, value)?,
            Hyperparameter::ModelSize => self.model_size = parse_model_size(value)?,
            Hyperparameter::Dropout => self.dropout = parse_num(key, value)?,
            Hyperparameter::MaxPatches => self.max_patches = parse_num(key, value)?,
        }
        Ok(())
    }

    pub fn get(&self, h: Hyperparameter) -> String {
        match h {
            Hyperparameter::LearningRate => self.learning_rate.to_string(),
            Hyperparameter::WeightDecay => self.weight_decay.to_string(),
            Hyperparameter::Beta1 => self.beta1.to_string(),
            Hyperparameter::Beta2 => self.beta2.to_string(),
            Hyperparameter::Epsilon => self.epsilon.to_string(),
            Hyperparameter::LrDecayPatience => self.lr_decay_patience.to_string(),
            Hyperparameter::LrDecayFactor => self.lr_decay_factor.to_string(),
            Hyperparameter::ModelSize => format_model_size(self.model_size),
            Hyperparameter::Dropout => self.dropout.to_string(),
            Hyperparameter::MaxPatches => self.max_patches.to_string(),
        }
    }

    /// Applies recognised keys from a parsed key=value map, returning the
    /// keys it did not recognise.
    pub fn apply_map(&mut self, map: &BTreeMap<String, String>) -> Result<Vec<String>, AbmilError> {
        let mut unknown = Vec::new();
        for (k, v) in map {
            match k.as_str() {
                "max_epochs" => self.max_epochs = parse_num(k, v)?,
                "seed" => self.seed = parse_num(k, v)?,
                other => match other.parse::<Hyperparameter>() {
                    Ok(h) => self.set(h, v)?,
                    Err(_) => unknown.push(k.clone()),
                },
            }
        }
        Ok(unknown)
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs: Vec<_> = Hyperparameter::ALL.iter().map(|&h| (h.key(), self.get(h))).collect();
        pairs.push(("max_epochs", self.max_epochs.to_string()));
        pairs.push(("seed", self.seed.to_string()));
        pairs
    }

    pub fn to_kv(&self) -> String {
        render_kv(self.pairs())
    }

    /// Parses a config written by [`TrainConfig::to_kv`]; missing keys keep
    /// their defaults, unknown keys are an error.
    pub fn from_kv(text: &str) -> Result<Self, AbmilError> {
        let map = parse_kv(text).map_err(|e| AbmilError::Config(e.to_string()))?;
        let mut cfg = TrainConfig::default();
        let unknown = cfg.apply_map(&map)?;
        if !unknown.is_empty() {
            return Err(AbmilError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
