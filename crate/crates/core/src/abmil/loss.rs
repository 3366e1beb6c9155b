use super::forward::softmax;
use crate::NUM_CLASSES;

/// Floor applied to the true-class probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Softmax of the classifier logits.
pub fn predict_proba(logits: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let p = softmax(logits);
    let mut out = [0.0; NUM_CLASSES];
    out.copy_from_slice(&p);
    out
}

/// Balanced class weights `N / (K · N_c)` from per-class training counts.
/// A class with no training examples gets weight 0.
pub fn class_weights(counts: &[usize; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let total: usize = counts.iter().sum();
    counts.map(|c| if c == 0 { 0.0 } else { total as f64 / (NUM_CLASSES as f64 * c as f64) })
}

/// Weighted cross-entropy `−w_y · ln p_y`.
pub fn balanced_ce_loss(probs: &[f64; NUM_CLASSES], label: usize, weights: &[f64; NUM_CLASSES]) -> f64 {
    -weights[label] * probs[label].max(PROB_FLOOR).ln()
}
