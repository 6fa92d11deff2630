use crate::error::{Error, Result};

use super::params::ParamSet;
use super::tensor::{axpy, dot, Tensor2};

/// Unidirectional LSTM parameters.
///
/// Gate rows are stacked in the order input, forget, cell candidate, output:
/// `w_ih` is `[4·hidden × input_dim]`, `w_hh` is `[4·hidden × hidden]` and
/// `bias` is `[4·hidden]`, all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w_ih: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gate index within the stacked rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Config(format!("lstm needs positive sizes (input {input_dim}, hidden {hidden})")));
        }
        Ok(LstmParams {
            input_dim,
            hidden,
            w_ih: vec![0.0; 4 * hidden * input_dim],
            w_hh: vec![0.0; 4 * hidden * hidden],
            bias: vec![0.0; 4 * hidden],
        })
    }

    /// Bias entries of one gate.
    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.hidden;
        let g = gate as usize;
        &mut self.bias[g * h..(g + 1) * h]
    }

    fn ih_row(&self, r: usize) -> &[f64] {
        &self.w_ih[r * self.input_dim..(r + 1) * self.input_dim]
    }

    fn hh_row(&self, r: usize) -> &[f64] {
        &self.w_hh[r * self.hidden..(r + 1) * self.hidden]
    }
}

impl ParamSet for LstmParams {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        vec![("w_ih".into(), &self.w_ih), ("w_hh".into(), &self.w_hh), ("bias".into(), &self.bias)]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }

    fn zeros_like(&self) -> Self {
        LstmParams {
            input_dim: self.input_dim,
            hidden: self.hidden,
            w_ih: vec![0.0; self.w_ih.len()],
            w_hh: vec![0.0; self.w_hh.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    inputs: Tensor2,
    /// Hidden states `h_0 ..= h_T`.
    h: Tensor2,
    /// Cell states `c_0 ..= c_T`.
    c: Tensor2,
    /// Activated gates per step, `[T × 4H]`.
    gates: Tensor2,
    tanh_c: Tensor2,
}

/// Gradients flowing out of an LSTM besides its parameter gradients.
#[derive(Debug, Clone)]
pub struct LstmInputGrads {
    pub d_inputs: Tensor2,
    pub d_h0: Vec<f64>,
    pub d_c0: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Runs the recurrence left to right and returns all `T` hidden states.
pub fn lstm_forward(inputs: &Tensor2, params: &LstmParams, h0: &[f64], c0: &[f64]) -> Result<(Tensor2, LstmCache)> {
    let hd = params.hidden;
    if inputs.cols() != params.input_dim {
        return Err(Error::Shape(format!(
            "lstm input width {} does not match input_dim {}",
            inputs.cols(),
            params.input_dim
        )));
    }
    if h0.len() != hd || c0.len() != hd {
        return Err(Error::Shape(format!(
            "lstm initial state lengths ({}, {}) do not match hidden {hd}",
            h0.len(),
            c0.len()
        )));
    }
    inputs.ensure_finite("lstm input")?;

    let steps = inputs.rows();
    let mut h = Tensor2::zeros(steps + 1, hd);
    let mut c = Tensor2::zeros(steps + 1, hd);
    h.row_mut(0).copy_from_slice(h0);
    c.row_mut(0).copy_from_slice(c0);
    let mut gates = Tensor2::zeros(steps, 4 * hd);
    let mut tanh_c = Tensor2::zeros(steps, hd);

    for t in 0..steps {
        let x = inputs.row(t);
        let g = gates.row_mut(t);
        {
            let h_prev = h.row(t);
            for (r, z) in g.iter_mut().enumerate() {
                *z = params.bias[r] + dot(params.ih_row(r), x) + dot(params.hh_row(r), h_prev);
            }
        }
        for (r, z) in g.iter_mut().enumerate() {
            *z = if r / hd == Gate::Cell as usize { z.tanh() } else { sigmoid(*z) };
        }
        let (c_done, c_rest) = c.as_mut_slice().split_at_mut((t + 1) * hd);
        let c_prev = &c_done[t * hd..];
        let c_next = &mut c_rest[..hd];
        let tc = tanh_c.row_mut(t);
        let h_next = h.row_mut(t + 1);
        for j in 0..hd {
            let (i_g, f_g, g_g, o_g) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            c_next[j] = f_g * c_prev[j] + i_g * g_g;
            tc[j] = c_next[j].tanh();
            h_next[j] = o_g * tc[j];
        }
    }

    let mut out = Tensor2::zeros(steps, hd);
    out.as_mut_slice().copy_from_slice(&h.as_slice()[hd..]);
    Ok((out, LstmCache { inputs: inputs.clone(), h, c, gates, tanh_c }))
}

/// Backpropagation through time.
///
/// `d_hidden` is the loss gradient with respect to each returned hidden
/// state. Parameter gradients are accumulated into `grads`.
pub fn lstm_backward(
    params: &LstmParams,
    cache: &LstmCache,
    d_hidden: &Tensor2,
    grads: &mut LstmParams,
) -> Result<LstmInputGrads> {
    let hd = params.hidden;
    let steps = cache.inputs.rows();
    if d_hidden.shape() != (steps, hd) {
        return Err(Error::Shape(format!(
            "lstm upstream gradient is {:?}, expected {:?}",
            d_hidden.shape(),
            (steps, hd)
        )));
    }
    let d_in = params.input_dim;
    let mut d_inputs = Tensor2::zeros(steps, d_in);
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];

    for t in (0..steps).rev() {
        let g = cache.gates.row(t);
        let tc = cache.tanh_c.row(t);
        let c_prev = cache.c.row(t);
        let dh_out = d_hidden.row(t);
        for j in 0..hd {
            let (i_g, f_g, g_g, o_g) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            let dh = dh_out[j] + dh_next[j];
            let d_o = dh * tc[j];
            let dc = dc_next[j] + dh * o_g * (1.0 - tc[j] * tc[j]);
            let d_i = dc * g_g;
            let d_g = dc * i_g;
            let d_f = dc * c_prev[j];
            dc_next[j] = dc * f_g;
            dz[j] = d_i * i_g * (1.0 - i_g);
            dz[hd + j] = d_f * f_g * (1.0 - f_g);
            dz[2 * hd + j] = d_g * (1.0 - g_g * g_g);
            dz[3 * hd + j] = d_o * o_g * (1.0 - o_g);
        }

        let x = cache.inputs.row(t);
        let h_prev = cache.h.row(t);
        dh_next.fill(0.0);
        let dx = d_inputs.row_mut(t);
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grads.bias[r] += d;
            axpy(d, x, &mut grads.w_ih[r * d_in..(r + 1) * d_in]);
            axpy(d, h_prev, &mut grads.w_hh[r * hd..(r + 1) * hd]);
            axpy(d, params.ih_row(r), dx);
            axpy(d, params.hh_row(r), &mut dh_next);
        }
    }

    Ok(LstmInputGrads { d_inputs, d_h0: dh_next, d_c0: dc_next })
}
