use crate::error::{Error, Result};

use super::params::ParamSet;
use super::tensor::{axpy, dot, Tensor2};

/// Valid (unpadded) 1-D cross-correlation parameters.
///
/// `kernels` is laid out `[out_channels][in_channels][kernel_size]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1dParams {
    pub fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize, stride: usize) -> Result<Self> {
        if kernel_size == 0 || stride == 0 || out_channels == 0 || in_channels == 0 {
            return Err(Error::Config(format!(
                "conv1d needs positive sizes (out {out_channels}, in {in_channels}, kernel {kernel_size}, stride {stride})"
            )));
        }
        Ok(Conv1dParams {
            out_channels,
            in_channels,
            kernel_size,
            stride,
            kernels: vec![0.0; out_channels * in_channels * kernel_size],
            bias: vec![0.0; out_channels],
        })
    }

    /// Number of output frames for an input of `len` frames.
    pub fn output_len(&self, len: usize) -> Option<usize> {
        (len >= self.kernel_size).then(|| (len - self.kernel_size) / self.stride + 1)
    }

    fn kernel_row(&self, o: usize) -> &[f64] {
        let w = self.in_channels * self.kernel_size;
        &self.kernels[o * w..(o + 1) * w]
    }

    /// Copies the receptive field of output frame `t` into `patch`, laid out `[c][k]`.
    fn gather(&self, input: &Tensor2, t: usize, patch: &mut [f64]) {
        let k = self.kernel_size;
        let start = t * self.stride;
        for c in 0..self.in_channels {
            for j in 0..k {
                patch[c * k + j] = input.get(start + j, c);
            }
        }
    }
}

impl ParamSet for Conv1dParams {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        vec![("kernels".into(), &self.kernels), ("bias".into(), &self.bias)]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.kernels, &mut self.bias]
    }

    fn zeros_like(&self) -> Self {
        Conv1dParams { kernels: vec![0.0; self.kernels.len()], bias: vec![0.0; self.bias.len()], ..*self }
    }
}

fn check_input(input: &Tensor2, params: &Conv1dParams) -> Result<usize> {
    if input.cols() != params.in_channels {
        return Err(Error::Shape(format!(
            "conv1d input has {} channels, kernel expects {}",
            input.cols(),
            params.in_channels
        )));
    }
    params.output_len(input.rows()).ok_or_else(|| {
        Error::Shape(format!("conv1d input length {} is shorter than kernel {}", input.rows(), params.kernel_size))
    })
}

/// `out[t][o] = bias[o] + Σ_{c,k} kernels[o][c][k] · input[t·stride + k][c]`
pub fn conv1d_forward(input: &Tensor2, params: &Conv1dParams) -> Result<Tensor2> {
    let out_len = check_input(input, params)?;
    input.ensure_finite("conv1d input")?;
    let mut out = Tensor2::zeros(out_len, params.out_channels);
    let mut patch = vec![0.0; params.in_channels * params.kernel_size];
    for t in 0..out_len {
        params.gather(input, t, &mut patch);
        let row = out.row_mut(t);
        for (o, v) in row.iter_mut().enumerate() {
            *v = params.bias[o] + dot(params.kernel_row(o), &patch);
        }
    }
    Ok(out)
}

/// Accumulates parameter gradients into `grads` and returns the gradient
/// with respect to `input`.
pub fn conv1d_backward(
    input: &Tensor2,
    params: &Conv1dParams,
    d_out: &Tensor2,
    grads: &mut Conv1dParams,
) -> Result<Tensor2> {
    let out_len = check_input(input, params)?;
    if d_out.shape() != (out_len, params.out_channels) {
        return Err(Error::Shape(format!(
            "conv1d upstream gradient is {:?}, expected {:?}",
            d_out.shape(),
            (out_len, params.out_channels)
        )));
    }
    let k = params.kernel_size;
    let w = params.in_channels * k;
    let mut d_input = Tensor2::zeros(input.rows(), input.cols());
    let mut patch = vec![0.0; w];
    let mut d_patch = vec![0.0; w];
    for t in 0..out_len {
        params.gather(input, t, &mut patch);
        d_patch.fill(0.0);
        for (o, &g) in d_out.row(t).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grads.bias[o] += g;
            axpy(g, &patch, &mut grads.kernels[o * w..(o + 1) * w]);
            axpy(g, params.kernel_row(o), &mut d_patch);
        }
        let start = t * params.stride;
        for c in 0..params.in_channels {
            for j in 0..k {
                let cur = d_input.get(start + j, c);
                d_input.set(start + j, c, cur + d_patch[c * k + j]);
            }
        }
    }
    Ok(d_input)
}
