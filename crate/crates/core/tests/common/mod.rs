//! Shared by several test binaries; not every binary uses every item.
#![allow(dead_code)]

use ecghan::model::{backward, eval_loss, HanConfig, HanModel};
use ecghan::nn::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded instances per layer.
pub const INSTANCES: u64 = 20;

fn randomize<P: ParamSet>(p: &mut P, rng: &mut ChaCha8Rng, scale: f64) {
    for b in p.blocks_mut() {
        b.iter_mut().for_each(|v| *v = rng.random_range(-scale..scale));
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor2::from_vec(rows, cols, data).unwrap()
}

fn projection(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn proj(out: &[f64], r: &[f64]) -> f64 {
    out.iter().zip(r).map(|(a, b)| a * b).sum()
}

/// Concatenates parameters and input into one point for the checker.
fn point<P: ParamSet>(p: &P, x: &[f64]) -> Vec<f64> {
    let mut v = p.to_flat();
    v.extend_from_slice(x);
    v
}

fn split<P: ParamSet + Clone>(p: &P, flat: &[f64]) -> (P, Vec<f64>) {
    let n = p.num_params();
    let mut q = p.clone();
    q.copy_from_flat(&flat[..n]).unwrap();
    (q, flat[n..].to_vec())
}

pub fn check(seed: u64) -> GradCheckConfig {
    GradCheckConfig { max_coords: 80, seed, ..GradCheckConfig::default() }
}

pub fn dense_check(seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DenseParams::zeros(7, 4).unwrap();
    randomize(&mut p, &mut rng, 1.0);
    let x = projection(&mut rng, 7);
    let r = projection(&mut rng, 4);
    let mut g = p.zeros_like();
    let dx = dense_backward(&x, &p, &r, &mut g).unwrap();
    gradient_check(
        |flat| {
            let (q, x) = split(&p, flat);
            Ok(proj(&dense_forward(&x, &q)?, &r))
        },
        &point(&p, &x),
        &point(&g, &dx),
        &check(seed),
    )
    .unwrap()
}

/// Strides alternate between 1 and 2.
pub fn conv1d_check(seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
    let stride = 1 + (seed as usize % 2);
    let mut p = Conv1dParams::zeros(3, 2, 5, stride).unwrap();
    randomize(&mut p, &mut rng, 0.5);
    let x = random_tensor(&mut rng, 14, 2);
    let t_out = p.output_len(14).unwrap();
    let r = random_tensor(&mut rng, t_out, 3);
    let mut g = p.zeros_like();
    let dx = conv1d_backward(&x, &p, &r, &mut g).unwrap();
    gradient_check(
        |flat| {
            let (q, xv) = split(&p, flat);
            let x = Tensor2::from_vec(14, 2, xv)?;
            Ok(proj(conv1d_forward(&x, &q)?.as_slice(), r.as_slice()))
        },
        &point(&p, x.as_slice()),
        &point(&g, dx.as_slice()),
        &check(seed),
    )
    .unwrap()
}

/// Covers the inputs and both initial states as well as the parameters.
pub fn lstm_check(seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
    let (d, h, t) = (3, 4, 4);
    let mut p = LstmParams::zeros(d, h).unwrap();
    randomize(&mut p, &mut rng, 0.6);
    let x = random_tensor(&mut rng, t, d);
    let h0 = projection(&mut rng, h);
    let c0 = projection(&mut rng, h);
    let r = random_tensor(&mut rng, t, h);
    let (_, cache) = lstm_forward(&x, &p, &h0, &c0).unwrap();
    let mut g = p.zeros_like();
    let back = lstm_backward(&p, &cache, &r, &mut g).unwrap();
    let mut tail = x.as_slice().to_vec();
    tail.extend(&h0);
    tail.extend(&c0);
    let mut analytic_tail = back.d_inputs.as_slice().to_vec();
    analytic_tail.extend(&back.d_h0);
    analytic_tail.extend(&back.d_c0);
    gradient_check(
        |flat| {
            let (q, rest) = split(&p, flat);
            let x = Tensor2::from_vec(t, d, rest[..t * d].to_vec())?;
            let h0 = &rest[t * d..t * d + h];
            let c0 = &rest[t * d + h..];
            let (out, _) = lstm_forward(&x, &q, h0, c0)?;
            Ok(proj(out.as_slice(), r.as_slice()))
        },
        &point(&p, &tail),
        &point(&g, &analytic_tail),
        &GradCheckConfig { max_coords: 200, ..check(seed) },
    )
    .unwrap()
}

pub fn attention_check(seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
    let (n, d) = (6, 5);
    let mut p = AttentionParams::zeros(d).unwrap();
    randomize(&mut p, &mut rng, 1.0);
    let x = random_tensor(&mut rng, n, d);
    let r = projection(&mut rng, d);
    let out = attention_pool(&x, &p).unwrap();
    let mut g = p.zeros_like();
    let dx = attention_backward(&x, &p, &out, &r, &mut g).unwrap();
    gradient_check(
        |flat| {
            let (q, xv) = split(&p, flat);
            let x = Tensor2::from_vec(n, d, xv)?;
            Ok(proj(&attention_pool(&x, &q)?.pooled, &r))
        },
        &point(&p, x.as_slice()),
        &point(&g, dx.as_slice()),
        &check(seed),
    )
    .unwrap()
}

/// Also returns the sum of the logit gradient, which must vanish.
pub fn softmax_ce_check(seed: u64) -> (GradCheckReport, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
    let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-4.0..4.0)).collect();
    let label = rng.random_range(0..5);
    let ce = softmax_cross_entropy(&logits, label).unwrap();
    let report =
        gradient_check(|z| Ok(softmax_cross_entropy(z, label)?.loss), &logits, &ce.grad_logits, &check(seed)).unwrap();
    (report, ce.grad_logits.iter().sum())
}

/// Two segments of 24 samples, 4 LSTM units, no dropout.
pub fn tiny_config() -> HanConfig {
    HanConfig {
        num_segments: 2,
        segment_len: 24,
        conv_filters: 3,
        conv_kernel: 5,
        conv_stride: 1,
        lstm_units: 4,
        fc_units: 6,
        num_classes: 5,
        dropout_rate: 0.0,
        ..HanConfig::default()
    }
}

/// Whole-network check on the tiny config with inputs in [-5, 5].
pub fn model_check(seed: u64) -> GradCheckReport {
    let cfg = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let model = HanModel::build(&cfg, seed).unwrap();
    let x: Vec<f64> = (0..cfg.window_len()).map(|_| rng.random_range(-5.0..5.0)).collect();
    let label = rng.random_range(0..cfg.num_classes);
    let (loss, grads) = backward(&model, &x, label, &mut rng).unwrap();
    assert!(loss.is_finite());
    let mut probe = model.clone();
    gradient_check(
        |flat| {
            probe.copy_from_flat(flat)?;
            eval_loss(&probe, &x, label)
        },
        &model.to_flat(),
        &grads.to_flat(),
        &GradCheckConfig { max_coords: 300, seed, ..Default::default() },
    )
    .unwrap()
}
