use super::OrchestratorError;
use crate::abmil::{forward, predict_proba, AbmilParams, Mode};
use crate::stats::argmax;
use crate::{FeatureBag, NUM_CLASSES};

/// Class probabilities of one model on one bag, all patches, no dropout.
pub fn predict_bag(params: &AbmilParams, bag: &FeatureBag) -> Result<[f64; NUM_CLASSES], OrchestratorError> {
    Ok(predict_proba(&forward(bag, params, Mode::Eval)?.logits))
}

/// Element-wise mean of member probability vectors, summed in member order.
pub fn mean_probabilities(members: &[[f64; NUM_CLASSES]]) -> Result<[f64; NUM_CLASSES], OrchestratorError> {
    if members.is_empty() {
        return Err(OrchestratorError::Shape("ensemble has no members".into()));
    }
    let mut sum = [0.0; NUM_CLASSES];
    for m in members {
        for (s, p) in sum.iter_mut().zip(m) {
            *s += p;
        }
    }
    Ok(sum.map(|s| s / members.len() as f64))
}

/// Averaged probabilities of `models` on `bag` and the argmax class, ties
/// resolved toward the lowest class code.
pub fn ensemble_predict(
    models: &[AbmilParams],
    bag: &FeatureBag,
) -> Result<([f64; NUM_CLASSES], usize), OrchestratorError> {
    if let Some(m) = models.iter().find(|m| m.shape().dim != models[0].shape().dim) {
        return Err(OrchestratorError::Shape(format!(
            "ensemble members disagree on feature dim ({} vs {})",
            m.shape().dim,
            models[0].shape().dim
        )));
    }
    let members = models.iter().map(|m| predict_bag(m, bag)).collect::<Result<Vec<_>, _>>()?;
    let mean = mean_probabilities(&members)?;
    Ok((mean, argmax(&mean)))
}
