use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutOutput {
    pub output: Vec<f64>,
    /// Per-coordinate multiplier: `0` or `1/(1 - rate)`; all ones in eval mode.
    pub mask: Vec<f64>,
}

/// Inverted dropout. In eval mode (or with `rate == 0`) the input passes
/// through unchanged and no random numbers are drawn.
pub fn dropout<R: Rng + ?Sized>(x: &[f64], rate: f64, train_mode: bool, rng: &mut R) -> Result<DropoutOutput> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !train_mode || rate == 0.0 {
        return Ok(DropoutOutput { output: x.to_vec(), mask: vec![1.0; x.len()] });
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = x.iter().map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
    let output = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
    Ok(DropoutOutput { output, mask })
}

pub fn dropout_backward(mask: &[f64], dy: &[f64]) -> Vec<f64> {
    mask.iter().zip(dy).map(|(m, g)| m * g).collect()
}
