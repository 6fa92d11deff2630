use crate::error::{Error, Result};

use super::attention::softmax_in_place;
use super::tensor::ensure_finite;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    pub loss: f64,
    pub probs: Vec<f64>,
    /// `probs - onehot(label)`
    pub grad_logits: Vec<f64>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut p = logits.to_vec();
    softmax_in_place(&mut p);
    p
}

pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<CrossEntropy> {
    if label >= logits.len() {
        return Err(Error::Config(format!("label {label} out of range for {} classes", logits.len())));
    }
    ensure_finite(logits, "logits")?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits[label];
    let probs = softmax(logits);
    let mut grad_logits = probs.clone();
    grad_logits[label] -= 1.0;
    Ok(CrossEntropy { loss, probs, grad_logits })
}
