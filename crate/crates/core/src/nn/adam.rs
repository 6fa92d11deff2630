use crate::error::{Error, Result};

use super::params::{check_congruent, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        AdamConfig { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates, one vector per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|(_, b)| vec![0.0; b.len()]).collect();
        AdamState { config, step: 0, m: zeros.clone(), v: zeros }
    }
}

/// One bias-corrected Adam update. Gradients are validated before any
/// parameter is touched, so a non-finite gradient leaves `params` and
/// `state` unchanged.
pub fn adam_step<P: ParamSet>(params: &mut P, grads: &P, state: &mut AdamState) -> Result<()> {
    check_congruent(params, grads)?;
    let grad_blocks = grads.blocks();
    if grad_blocks.len() != state.m.len() || grad_blocks.iter().zip(&state.m).any(|((_, g), m)| g.len() != m.len()) {
        return Err(Error::Shape("adam moments are not congruent with the parameters".into()));
    }
    for (name, g) in &grad_blocks {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient {name}[{i}] = {}", g[i])));
        }
    }

    state.step += 1;
    let AdamConfig { learning_rate: lr, beta1: b1, beta2: b2, epsilon: eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);

    for (((p, (_, g)), m), v) in params.blocks_mut().into_iter().zip(&grad_blocks).zip(&mut state.m).zip(&mut state.v) {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseParams;

    fn scalar(v: f64) -> DenseParams {
        DenseParams { in_dim: 1, out_dim: 1, weights: vec![v], bias: vec![0.0] }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = scalar(0.37);
        let g = p.zeros_like();
        let mut s = AdamState::new(&p, AdamConfig::new(0.1));
        for _ in 0..5 {
            adam_step(&mut p, &g, &mut s).unwrap();
        }
        assert_eq!(p.weights[0], 0.37);
        assert_eq!(s.step, 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(1.0);
        let mut g = p.zeros_like();
        g.weights[0] = 1.0;
        let mut s = AdamState::new(&p, AdamConfig::new(0.1));
        adam_step(&mut p, &g, &mut s).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = -0.1 / (1 + 1e-8)
        let expected = 1.0 - 0.1 / (1.0 + 1e-8);
        assert!((p.weights[0] - expected).abs() < 1e-15);
        assert!((p.weights[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn first_step_opposes_gradient_sign() {
        for g0 in [-3.0, -1e-3, 2e-5, 7.0] {
            let mut p = scalar(0.0);
            let mut g = p.zeros_like();
            g.weights[0] = g0;
            let mut s = AdamState::new(&p, AdamConfig::new(0.01));
            adam_step(&mut p, &g, &mut s).unwrap();
            assert_eq!(p.weights[0].signum(), -g0.signum());
        }
    }

    #[test]
    fn non_finite_gradient_names_location() {
        let mut p = scalar(0.0);
        let mut g = p.zeros_like();
        g.bias[0] = f64::NAN;
        let mut s = AdamState::new(&p, AdamConfig::new(0.01));
        let err = adam_step(&mut p, &g, &mut s).unwrap_err();
        assert!(err.to_string().contains("bias[0]"), "{err}");
        assert_eq!(s.step, 0);
    }
}
