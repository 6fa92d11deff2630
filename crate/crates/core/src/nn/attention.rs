use crate::error::{Error, Result};

use super::params::ParamSet;
use super::tensor::{axpy, dot, Tensor2};

/// Additive attention scoring: one weight per feature plus a scalar bias.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w: Vec<f64>,
    pub b: f64,
}

impl AttentionParams {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("attention width must be positive".into()));
        }
        Ok(AttentionParams { w: vec![0.0; dim], b: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

impl ParamSet for AttentionParams {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        vec![("w".into(), &self.w), ("b".into(), std::slice::from_ref(&self.b))]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w, std::slice::from_mut(&mut self.b)]
    }

    fn zeros_like(&self) -> Self {
        AttentionParams { w: vec![0.0; self.w.len()], b: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// `v = tanh(X·W + b)`
    pub scores: Vec<f64>,
    /// Softmax of the scores; nonnegative and summing to one.
    pub weights: Vec<f64>,
    /// `Σ_i weights[i] · X_i`
    pub pooled: Vec<f64>,
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

/// Scores each row of `x`, normalizes the scores with a softmax and returns
/// the attention-weighted sum of rows.
pub fn attention_pool(x: &Tensor2, params: &AttentionParams) -> Result<AttentionOutput> {
    if x.rows() == 0 {
        return Err(Error::Empty("attention over zero rows".into()));
    }
    if x.cols() != params.dim() {
        return Err(Error::Shape(format!(
            "attention input width {} does not match W of length {}",
            x.cols(),
            params.dim()
        )));
    }
    x.ensure_finite("attention input")?;
    let scores: Vec<f64> = x.iter_rows().map(|row| (dot(row, &params.w) + params.b).tanh()).collect();
    let mut weights = scores.clone();
    softmax_in_place(&mut weights);
    let mut pooled = vec![0.0; x.cols()];
    for (row, &a) in x.iter_rows().zip(&weights) {
        axpy(a, row, &mut pooled);
    }
    Ok(AttentionOutput { scores, weights, pooled })
}

/// Accumulates `dW`, `db` into `grads` and returns `dX`.
pub fn attention_backward(
    x: &Tensor2,
    params: &AttentionParams,
    out: &AttentionOutput,
    d_pooled: &[f64],
    grads: &mut AttentionParams,
) -> Result<Tensor2> {
    if d_pooled.len() != x.cols() || out.weights.len() != x.rows() {
        return Err(Error::Shape(format!(
            "attention backward: input {:?}, {} weights, upstream {}",
            x.shape(),
            out.weights.len(),
            d_pooled.len()
        )));
    }
    let d_alpha: Vec<f64> = x.iter_rows().map(|row| dot(row, d_pooled)).collect();
    let mean: f64 = out.weights.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let mut dx = Tensor2::zeros(x.rows(), x.cols());
    for (i, row) in x.iter_rows().enumerate() {
        let a = out.weights[i];
        let v = out.scores[i];
        let ds = a * (d_alpha[i] - mean) * (1.0 - v * v);
        grads.b += ds;
        axpy(ds, row, &mut grads.w);
        let dxi = dx.row_mut(i);
        axpy(a, d_pooled, dxi);
        axpy(ds, &params.w, dxi);
    }
    Ok(dx)
}
