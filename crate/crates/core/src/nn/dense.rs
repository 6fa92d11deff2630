use crate::error::{Error, Result};

use super::params::ParamSet;
use super::tensor::{axpy, dot};

/// Fully connected layer; `weights` is `[out_dim × in_dim]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config(format!("dense layer needs positive sizes (in {in_dim}, out {out_dim})")));
        }
        Ok(DenseParams { in_dim, out_dim, weights: vec![0.0; in_dim * out_dim], bias: vec![0.0; out_dim] })
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }
}

impl ParamSet for DenseParams {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        vec![("weights".into(), &self.weights), ("bias".into(), &self.bias)]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights, &mut self.bias]
    }

    fn zeros_like(&self) -> Self {
        DenseParams {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }
}

pub fn dense_forward(x: &[f64], params: &DenseParams) -> Result<Vec<f64>> {
    if x.len() != params.in_dim {
        return Err(Error::Shape(format!("dense input has {} values, layer expects {}", x.len(), params.in_dim)));
    }
    Ok((0..params.out_dim).map(|o| params.bias[o] + dot(params.row(o), x)).collect())
}

/// Accumulates parameter gradients and returns `dx`.
pub fn dense_backward(x: &[f64], params: &DenseParams, dy: &[f64], grads: &mut DenseParams) -> Result<Vec<f64>> {
    if x.len() != params.in_dim || dy.len() != params.out_dim {
        return Err(Error::Shape(format!(
            "dense backward: input {} (expected {}), upstream {} (expected {})",
            x.len(),
            params.in_dim,
            dy.len(),
            params.out_dim
        )));
    }
    let mut dx = vec![0.0; params.in_dim];
    for (o, &g) in dy.iter().enumerate() {
        grads.bias[o] += g;
        axpy(g, x, &mut grads.weights[o * params.in_dim..(o + 1) * params.in_dim]);
        axpy(g, params.row(o), &mut dx);
    }
    Ok(dx)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Gradient of ReLU given its input and the upstream gradient.
pub fn relu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter().zip(dy).map(|(&v, &g)| if v > 0.0 { g } else { 0.0 }).collect()
}
