use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamHyper, AdamState};
use super::backward::backward;
use super::forward::{forward, Mode};
use super::loss::{balanced_ce_loss, class_weights, predict_proba};
use super::{AbmilError, AbmilParams, ModelShape, TrainConfig};
use crate::{FeatureBag, SubtypeLabel, NUM_CLASSES};

/// Minimum validation-loss decrease that counts as an improvement.
pub const PLATEAU_THRESHOLD: f64 = 1e-6;

/// A labelled bag borrowed from wherever the bags are held.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub bag: &'a FeatureBag,
    pub label: SubtypeLabel,
}

pub fn class_counts(samples: &[Sample]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for s in samples {
        counts[s.label.code()] += 1;
    }
    counts
}

/// Draws slide indices with probability proportional to `1 / N_class`.
#[derive(Debug, Clone)]
pub struct ClassBalancedSampler {
    dist: WeightedIndex<f64>,
}

impl ClassBalancedSampler {
    pub fn new(labels: &[SubtypeLabel]) -> Result<Self, AbmilError> {
        let mut counts = [0usize; NUM_CLASSES];
        labels.iter().for_each(|l| counts[l.code()] += 1);
        let weights = labels.iter().map(|l| 1.0 / counts[l.code()] as f64);
        let dist = WeightedIndex::new(weights).map_err(|e| AbmilError::Config(format!("sampler: {e}")))?;
        Ok(ClassBalancedSampler { dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate in effect during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the lowest validation loss.
    pub params: AbmilParams,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochRecord>,
}

/// Mean weighted cross-entropy over `samples` in evaluation mode.
pub fn mean_loss(
    samples: &[Sample],
    params: &AbmilParams,
    weights: &[f64; NUM_CLASSES],
) -> Result<f64, AbmilError> {
    let mut total = 0.0;
    for s in samples {
        let out = forward(s.bag, params, Mode::Eval)?;
        total += balanced_ce_loss(&predict_proba(&out.logits), s.label.code(), weights);
    }
    Ok(total / samples.len() as f64)
}

/// Trains one model on `train`, selecting the epoch by loss on `val`.
///
/// Each epoch takes one optimiser step per training slide, with slides drawn
/// by [`ClassBalancedSampler`]. Both losses use class weights from the
/// training counts. The learning rate is multiplied by `lr_decay_factor`
/// after `lr_decay_patience` consecutive epochs without improvement.
pub fn train_fold(train: &[Sample], val: &[Sample], config: &TrainConfig) -> Result<TrainOutcome, AbmilError> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(AbmilError::Config("training and validation sets must be non-empty".into()));
    }
    let dim = train[0].bag.dim;
    if let Some(s) = train.iter().chain(val).find(|s| s.bag.dim != dim) {
        return Err(AbmilError::Shape(format!("bag {} has dim {}, expected {dim}", s.bag.slide_id, s.bag.dim)));
    }

    let shape = ModelShape::new(dim, config.model_size.0, config.model_size.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = AbmilParams::init(shape, rng.next_u64());
    let mut state = AdamState::new(&params);
    let weights = class_weights(&class_counts(train));
    let labels: Vec<SubtypeLabel> = train.iter().map(|s| s.label).collect();
    let sampler = ClassBalancedSampler::new(&labels)?;

    let mut hp = AdamHyper {
        learning_rate: config.learning_rate,
        beta1: config.beta1,
        beta2: config.beta2,
        epsilon: config.epsilon,
        weight_decay: config.weight_decay,
    };
    let mut best = (params.clone(), 0usize, f64::INFINITY);
    let mut stale_epochs = 0;
    let mut history = Vec::with_capacity(config.max_epochs);

    for epoch in 1..=config.max_epochs {
        let mut train_loss = 0.0;
        for _ in 0..train.len() {
            let s = train[sampler.sample(&mut rng)];
            let mode = Mode::Train { dropout: config.dropout, max_patches: config.max_patches, seed: rng.next_u64() };
            let out = forward(s.bag, &params, mode)?;
            let loss = balanced_ce_loss(&predict_proba(&out.logits), s.label.code(), &weights);
            if !loss.is_finite() {
                return Err(AbmilError::Divergence(format!("epoch {epoch}: loss on {} is {loss}", s.bag.slide_id)));
            }
            train_loss += loss;
            let grads = backward(&out.cache, &params, s.label.code(), &weights)?;
            adam_step(&mut params, &grads, &mut state, &hp)
                .map_err(|e| AbmilError::Divergence(format!("epoch {epoch}, slide {}: {e}", s.bag.slide_id)))?;
        }
        let val_loss = mean_loss(val, &params, &weights)?;
        if !val_loss.is_finite() {
            return Err(AbmilError::Divergence(format!("epoch {epoch}: validation loss is {val_loss}")));
        }
        history.push(EpochRecord {
            epoch,
            train_loss: train_loss / train.len() as f64,
            val_loss,
            lr: hp.learning_rate,
        });

        if val_loss < best.2 - PLATEAU_THRESHOLD {
            best = (params.clone(), epoch, val_loss);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.lr_decay_patience {
                hp.learning_rate *= config.lr_decay_factor;
                stale_epochs = 0;
            }
        }
    }
    let (params, best_epoch, best_val_loss) = best;
    Ok(TrainOutcome { params, best_epoch, best_val_loss, history })
}

pub fn write_history_csv(history: &[EpochRecord], out: impl Write) -> Result<(), AbmilError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "val_loss", "lr"])?;
    for r in history {
        w.write_record([r.epoch.to_string(), r.train_loss.to_string(), r.val_loss.to_string(), r.lr.to_string()])?;
    }
    w.flush().map_err(|e| AbmilError::Csv(e.into()))?;
    Ok(())
}

pub fn read_history_csv(input: impl Read) -> Result<Vec<EpochRecord>, AbmilError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let field = |i: usize| -> Result<&str, AbmilError> {
            row.get(i).ok_or_else(|| AbmilError::Format(format!("history row has {} fields", row.len())))
        };
        let num = |i: usize| -> Result<f64, AbmilError> {
            field(i)?.parse().map_err(|_| AbmilError::Format(format!("bad number `{}`", field(i).unwrap_or(""))))
        };
        out.push(EpochRecord {
            epoch: field(0)?.parse().map_err(|_| AbmilError::Format("bad epoch".into()))?,
            train_loss: num(1)?,
            val_loss: num(2)?,
            lr: num(3)?,
        });
    }
    Ok(out)
}
