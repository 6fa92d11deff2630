use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{
    attention_backward, attention_pool, conv1d_backward, conv1d_forward, dense_backward, dense_forward, dropout,
    dropout_backward, lstm_backward, lstm_forward, prefixed, relu, relu_backward, softmax_cross_entropy,
    AttentionOutput, AttentionParams, Conv1dParams, DenseParams, Gate, LstmCache, LstmParams, ParamSet, Tensor2,
};

use super::config::HanConfig;

/// An LSTM encoder, optionally with a second LSTM reading the sequence in
/// reverse. Bidirectional outputs concatenate `[forward, reverse]` per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub forward: LstmParams,
    pub reverse: Option<LstmParams>,
}

#[derive(Debug, Clone)]
struct EncoderCache {
    forward: LstmCache,
    reverse: Option<LstmCache>,
}

fn reversed_rows(t: &Tensor2) -> Tensor2 {
    let mut out = Tensor2::zeros(t.rows(), t.cols());
    for (i, row) in t.iter_rows().enumerate() {
        out.row_mut(t.rows() - 1 - i).copy_from_slice(row);
    }
    out
}

impl Encoder {
    fn zeros(input_dim: usize, hidden: usize, bidirectional: bool) -> Result<Self> {
        Ok(Encoder {
            forward: LstmParams::zeros(input_dim, hidden)?,
            reverse: if bidirectional { Some(LstmParams::zeros(input_dim, hidden)?) } else { None },
        })
    }

    pub fn output_dim(&self) -> usize {
        self.forward.hidden * if self.reverse.is_some() { 2 } else { 1 }
    }

    fn run(&self, x: &Tensor2) -> Result<(Tensor2, EncoderCache)> {
        let h = self.forward.hidden;
        let zeros = vec![0.0; h];
        let (hf, cf) = lstm_forward(x, &self.forward, &zeros, &zeros)?;
        let Some(rev) = &self.reverse else {
            return Ok((hf, EncoderCache { forward: cf, reverse: None }));
        };
        let (hr, cr) = lstm_forward(&reversed_rows(x), rev, &zeros, &zeros)?;
        let mut out = Tensor2::zeros(x.rows(), 2 * h);
        for t in 0..x.rows() {
            let row = out.row_mut(t);
            row[..h].copy_from_slice(hf.row(t));
            row[h..].copy_from_slice(hr.row(x.rows() - 1 - t));
        }
        Ok((out, EncoderCache { forward: cf, reverse: Some(cr) }))
    }

    fn backprop(&self, cache: &EncoderCache, d_out: &Tensor2, grads: &mut Encoder) -> Result<Tensor2> {
        let h = self.forward.hidden;
        let steps = d_out.rows();
        let (Some(rev), Some(rev_cache), Some(rev_grads)) = (&self.reverse, &cache.reverse, &mut grads.reverse) else {
            return Ok(lstm_backward(&self.forward, &cache.forward, d_out, &mut grads.forward)?.d_inputs);
        };
        let mut df = Tensor2::zeros(steps, h);
        let mut dr = Tensor2::zeros(steps, h);
        for t in 0..steps {
            let row = d_out.row(t);
            df.row_mut(t).copy_from_slice(&row[..h]);
            dr.row_mut(steps - 1 - t).copy_from_slice(&row[h..]);
        }
        let mut dx = lstm_backward(&self.forward, &cache.forward, &df, &mut grads.forward)?.d_inputs;
        let dx_rev = lstm_backward(rev, rev_cache, &dr, rev_grads)?.d_inputs;
        for t in 0..steps {
            let src = dx_rev.row(steps - 1 - t);
            for (d, s) in dx.row_mut(t).iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(dx)
    }

    fn blocks<'a>(&'a self, prefix: &str) -> Vec<(String, &'a [f64])> {
        let mut out = prefixed(&format!("{prefix}.lstm"), self.forward.blocks());
        if let Some(r) = &self.reverse {
            out.extend(prefixed(&format!("{prefix}.lstm_reverse"), r.blocks()));
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.forward.blocks_mut();
        if let Some(r) = &mut self.reverse {
            out.extend(r.blocks_mut());
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Encoder { forward: self.forward.zeros_like(), reverse: self.reverse.as_ref().map(|r| r.zeros_like()) }
    }
}

/// One hierarchy level: an encoder followed by attention pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub encoder: Encoder,
    pub attention: AttentionParams,
}

#[derive(Debug, Clone)]
struct LevelTrace {
    cache: EncoderCache,
    states: Tensor2,
    attention: AttentionOutput,
}

impl Level {
    fn zeros(input_dim: usize, hidden: usize, bidirectional: bool) -> Result<Self> {
        let encoder = Encoder::zeros(input_dim, hidden, bidirectional)?;
        let attention = AttentionParams::zeros(encoder.output_dim())?;
        Ok(Level { encoder, attention })
    }

    fn run(&self, input: &Tensor2) -> Result<LevelTrace> {
        let (states, cache) = self.encoder.run(input)?;
        let attention = attention_pool(&states, &self.attention)?;
        Ok(LevelTrace { cache, states, attention })
    }

    /// Returns the gradient with respect to the level input.
    fn backprop(&self, trace: &LevelTrace, d_pooled: &[f64], grads: &mut Level) -> Result<Tensor2> {
        let d_states =
            attention_backward(&trace.states, &self.attention, &trace.attention, d_pooled, &mut grads.attention)?;
        self.encoder.backprop(&trace.cache, &d_states, &mut grads.encoder)
    }

    fn blocks<'a>(&'a self, prefix: &str) -> Vec<(String, &'a [f64])> {
        let mut out = self.encoder.blocks(prefix);
        out.extend(prefixed(&format!("{prefix}.attention"), self.attention.blocks()));
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.blocks_mut();
        out.extend(self.attention.blocks_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        Level { encoder: self.encoder.zeros_like(), attention: self.attention.zeros_like() }
    }
}

/// The hierarchical attention network.
///
/// Parameter blocks are declared in forward order: conv, segment level,
/// optional group level, sequence level, FC, output. That order is also the
/// order of [`ParamSet::blocks`] and of the weight file.
#[derive(Debug, Clone, PartialEq)]
pub struct HanModel {
    pub config: HanConfig,
    pub conv: Conv1dParams,
    pub segment: Level,
    pub group: Option<Level>,
    pub sequence: Level,
    pub fc: DenseParams,
    pub output: DenseParams,
}

/// Gradients of the loss, stored in a model-shaped container.
pub type GradBundle = HanModel;

impl ParamSet for HanModel {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out = prefixed("conv", self.conv.blocks());
        out.extend(self.segment.blocks("segment"));
        if let Some(g) = &self.group {
            out.extend(g.blocks("group"));
        }
        out.extend(self.sequence.blocks("sequence"));
        out.extend(prefixed("fc", self.fc.blocks()));
        out.extend(prefixed("output", self.output.blocks()));
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.conv.blocks_mut();
        out.extend(self.segment.blocks_mut());
        if let Some(g) = &mut self.group {
            out.extend(g.blocks_mut());
        }
        out.extend(self.sequence.blocks_mut());
        out.extend(self.fc.blocks_mut());
        out.extend(self.output.blocks_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        HanModel {
            config: self.config.clone(),
            conv: self.conv.zeros_like(),
            segment: self.segment.zeros_like(),
            group: self.group.as_ref().map(Level::zeros_like),
            sequence: self.sequence.zeros_like(),
            fc: self.fc.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

fn fill_uniform(block: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng) {
    let a = 1.0 / (fan_in as f64).sqrt();
    for v in block.iter_mut() {
        *v = rng.random_range(-a..a);
    }
}

fn init_lstm(p: &mut LstmParams, rng: &mut ChaCha8Rng) {
    fill_uniform(&mut p.w_ih, p.input_dim, rng);
    fill_uniform(&mut p.w_hh, p.hidden, rng);
    p.gate_bias_mut(Gate::Forget).fill(1.0);
}

fn init_level(level: &mut Level, rng: &mut ChaCha8Rng) {
    init_lstm(&mut level.encoder.forward, rng);
    if let Some(r) = &mut level.encoder.reverse {
        init_lstm(r, rng);
    }
    let d = level.attention.dim();
    fill_uniform(&mut level.attention.w, d, rng);
}

impl HanModel {
    /// An all-zero model with the layer shapes implied by `config`.
    pub fn zeros(config: &HanConfig) -> Result<Self> {
        config.validate()?;
        let width = config.encoder_width();
        let (units, bi) = (config.lstm_units, config.bidirectional);
        Ok(HanModel {
            config: config.clone(),
            conv: Conv1dParams::zeros(config.conv_filters, 1, config.conv_kernel, config.conv_stride)?,
            segment: Level::zeros(config.conv_filters, units, bi)?,
            group: if config.hierarchy_levels == 3 { Some(Level::zeros(width, units, bi)?) } else { None },
            sequence: Level::zeros(width, units, bi)?,
            fc: DenseParams::zeros(width, config.fc_units)?,
            output: DenseParams::zeros(config.fc_units, config.num_classes)?,
        })
    }

    /// Builds a model with weights drawn from `U(-1/√fan_in, 1/√fan_in)`.
    /// Biases start at zero except LSTM forget gates, which start at one.
    pub fn build(config: &HanConfig, seed: u64) -> Result<Self> {
        let mut m = HanModel::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan = m.conv.in_channels * m.conv.kernel_size;
        fill_uniform(&mut m.conv.kernels, fan, &mut rng);
        init_level(&mut m.segment, &mut rng);
        if let Some(g) = &mut m.group {
            init_level(g, &mut rng);
        }
        init_level(&mut m.sequence, &mut rng);
        let fan = m.fc.in_dim;
        fill_uniform(&mut m.fc.weights, fan, &mut rng);
        let fan = m.output.in_dim;
        fill_uniform(&mut m.output.weights, fan, &mut rng);
        Ok(m)
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.num_params()
    }
}

/// Attention weights of one forward pass together with the raw-sample
/// ranges each weight covers.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    /// `segment_weights[j][t]`: weight of post-conv step `t` within segment `j`.
    pub segment_weights: Vec<Vec<f64>>,
    /// One weight per segment. For a three-level model this is the product of
    /// the within-group weight and the weight of the segment's group, so it
    /// still sums to one across the window.
    pub sequence_weights: Vec<f64>,
    /// Top-level weights over groups (three-level models only).
    pub group_weights: Option<Vec<f64>>,
    /// Samples covered by `segment_weights[j][t]`: the conv receptive field.
    pub segment_ranges: Vec<Vec<Range<usize>>>,
    /// Samples covered by `sequence_weights[j]`: segment `j` itself.
    pub sequence_ranges: Vec<Range<usize>>,
}

impl AttentionMap {
    fn new(
        config: &HanConfig,
        segment_weights: Vec<Vec<f64>>,
        sequence_weights: Vec<f64>,
        group_weights: Option<Vec<f64>>,
    ) -> Self {
        let l = config.segment_len;
        let steps = config.conv_steps();
        let segment_ranges = (0..config.num_segments)
            .map(|j| {
                (0..steps)
                    .map(|t| {
                        let start = j * l + t * config.conv_stride;
                        start..start + config.conv_kernel
                    })
                    .collect()
            })
            .collect();
        let sequence_ranges = (0..config.num_segments).map(|j| j * l..(j + 1) * l).collect();
        AttentionMap { segment_weights, sequence_weights, group_weights, segment_ranges, sequence_ranges }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub attention: AttentionMap,
}

impl Prediction {
    pub fn class(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

struct SegmentTrace {
    input: Tensor2,
    level: LevelTrace,
}

struct Trace {
    segments: Vec<SegmentTrace>,
    groups: Vec<LevelTrace>,
    sequence: LevelTrace,
    dropout_mask: Vec<f64>,
    dropped: Vec<f64>,
    fc_pre: Vec<f64>,
    fc_act: Vec<f64>,
    logits: Vec<f64>,
}

fn stack_rows(rows: &[&[f64]]) -> Result<Tensor2> {
    Tensor2::from_rows(rows)
}

fn run_trace<R: Rng + ?Sized>(model: &HanModel, window: &[f64], train_mode: bool, rng: &mut R) -> Result<Trace> {
    let cfg = &model.config;
    if window.len() != cfg.window_len() {
        return Err(Error::Shape(format!(
            "window has {} samples, model expects {} ({} segments × {})",
            window.len(),
            cfg.window_len(),
            cfg.num_segments,
            cfg.segment_len
        )));
    }
    crate::nn::ensure_finite(window, "window")?;
    let mut segments = Vec::with_capacity(cfg.num_segments);
    for chunk in window.chunks_exact(cfg.segment_len) {
        let input = Tensor2::column(chunk);
        let conv_out = conv1d_forward(&input, &model.conv)?;
        let level = model.segment.run(&conv_out)?;
        segments.push(SegmentTrace { input, level });
    }
    let pooled: Vec<&[f64]> = segments.iter().map(|s| s.level.attention.pooled.as_slice()).collect();
    let mut groups = Vec::new();
    let sequence_input = match &model.group {
        None => stack_rows(&pooled)?,
        Some(group) => {
            for chunk in pooled.chunks_exact(cfg.group_size) {
                groups.push(group.run(&stack_rows(chunk)?)?);
            }
            let g: Vec<&[f64]> = groups.iter().map(|t| t.attention.pooled.as_slice()).collect();
            stack_rows(&g)?
        }
    };
    let sequence = model.sequence.run(&sequence_input)?;
    let d = dropout(&sequence.attention.pooled, cfg.dropout_rate, train_mode, rng)?;
    let fc_pre = dense_forward(&d.output, &model.fc)?;
    let fc_act = relu(&fc_pre);
    let logits = dense_forward(&fc_act, &model.output)?;
    Ok(Trace { segments, groups, sequence, dropout_mask: d.mask, dropped: d.output, fc_pre, fc_act, logits })
}

fn attention_map(model: &HanModel, trace: &Trace) -> AttentionMap {
    let cfg = &model.config;
    let segment_weights = trace.segments.iter().map(|s| s.level.attention.weights.clone()).collect();
    let top = &trace.sequence.attention.weights;
    if trace.groups.is_empty() {
        return AttentionMap::new(cfg, segment_weights, top.clone(), None);
    }
    let mut sequence_weights = Vec::with_capacity(cfg.num_segments);
    for (g, gt) in trace.groups.iter().enumerate() {
        sequence_weights.extend(gt.attention.weights.iter().map(|w| w * top[g]));
    }
    AttentionMap::new(cfg, segment_weights, sequence_weights, Some(top.clone()))
}

/// Runs the network on one window. Dropout is active only in train mode,
/// and `rng` is only drawn from in that case.
pub fn forward<R: Rng + ?Sized>(model: &HanModel, window: &[f64], train_mode: bool, rng: &mut R) -> Result<Prediction> {
    let trace = run_trace(model, window, train_mode, rng)?;
    let probs = crate::nn::softmax(&trace.logits);
    let attention = attention_map(model, &trace);
    Ok(Prediction { logits: trace.logits, probs, attention })
}

/// Eval-mode [`forward`]; no random numbers are involved.
pub fn predict(model: &HanModel, window: &[f64]) -> Result<Prediction> {
    forward(model, window, false, &mut ChaCha8Rng::seed_from_u64(0))
}

/// Loss and class probabilities of one training example.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub loss: f64,
    pub probs: Vec<f64>,
}

/// Train-mode forward plus full backpropagation, adding the gradient of the
/// cross-entropy loss into `grads` (which must be congruent to `model`).
pub fn backward_into<R: Rng + ?Sized>(
    model: &HanModel,
    window: &[f64],
    label: usize,
    rng: &mut R,
    grads: &mut GradBundle,
) -> Result<StepResult> {
    let trace = run_trace(model, window, true, rng)?;
    let ce = softmax_cross_entropy(&trace.logits, label)?;

    let d_fc_act = dense_backward(&trace.fc_act, &model.output, &ce.grad_logits, &mut grads.output)?;
    let d_fc_pre = relu_backward(&trace.fc_pre, &d_fc_act);
    let d_dropped = dense_backward(&trace.dropped, &model.fc, &d_fc_pre, &mut grads.fc)?;
    let d_pooled = dropout_backward(&trace.dropout_mask, &d_dropped);
    let d_seq_in = model.sequence.backprop(&trace.sequence, &d_pooled, &mut grads.sequence)?;

    let d_segment_pooled = match (&model.group, &mut grads.group) {
        (None, _) => d_seq_in,
        (Some(group), Some(group_grads)) => {
            let mut rows = Vec::with_capacity(model.config.num_segments);
            for (g, gt) in trace.groups.iter().enumerate() {
                let d = group.backprop(gt, d_seq_in.row(g), group_grads)?;
                rows.extend(d.iter_rows().map(<[f64]>::to_vec));
            }
            Tensor2::from_rows(&rows)?
        }
        (Some(_), None) => return Err(Error::Shape("gradient bundle lacks the group level".into())),
    };

    for (j, seg) in trace.segments.iter().enumerate() {
        let d_conv = model.segment.backprop(&seg.level, d_segment_pooled.row(j), &mut grads.segment)?;
        conv1d_backward(&seg.input, &model.conv, &d_conv, &mut grads.conv)?;
    }
    Ok(StepResult { loss: ce.loss, probs: ce.probs })
}

/// Loss and gradient bundle of one training example.
pub fn backward<R: Rng + ?Sized>(
    model: &HanModel,
    window: &[f64],
    label: usize,
    rng: &mut R,
) -> Result<(f64, GradBundle)> {
    let mut grads = model.zeros_like();
    let step = backward_into(model, window, label, rng, &mut grads)?;
    Ok((step.loss, grads))
}

/// Cross-entropy loss of a single example in eval mode (no dropout).
pub fn eval_loss(model: &HanModel, window: &[f64], label: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = run_trace(model, window, false, &mut rng)?;
    Ok(softmax_cross_entropy(&trace.logits, label)?.loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn default_forward_shapes() {
        let cfg = HanConfig::default();
        let m = HanModel::build(&cfg, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = forward(&m, &window(300, 2), false, &mut rng).unwrap();
        assert_eq!(p.probs.len(), 5);
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(p.attention.segment_weights.len(), 10);
        assert!(p.attention.segment_weights.iter().all(|w| w.len() == 10));
        assert_eq!(p.attention.sequence_ranges[3], 90..120);
        assert!(forward(&m, &window(299, 2), false, &mut rng).is_err());
    }

    #[test]
    fn three_level_map_is_normalized() {
        let cfg = HanConfig { hierarchy_levels: 3, ..HanConfig::default() };
        let m = HanModel::build(&cfg, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = forward(&m, &window(300, 5), false, &mut rng).unwrap();
        assert_eq!(p.attention.sequence_weights.len(), 10);
        assert!((p.attention.sequence_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.attention.group_weights.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn bidirectional_gradient_matches_finite_differences() {
        let cfg = HanConfig {
            num_segments: 2,
            segment_len: 12,
            conv_filters: 2,
            conv_kernel: 5,
            conv_stride: 2,
            lstm_units: 3,
            fc_units: 4,
            num_classes: 3,
            dropout_rate: 0.0,
            bidirectional: true,
            ..HanConfig::default()
        };
        let m = HanModel::build(&cfg, 3).unwrap();
        let x = window(24, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, g) = backward(&m, &x, 1, &mut rng).unwrap();
        let mut probe = m.clone();
        let report = crate::nn::gradient_check(
            |flat| {
                probe.copy_from_flat(flat)?;
                eval_loss(&probe, &x, 1)
            },
            &m.to_flat(),
            &g.to_flat(),
            &crate::nn::GradCheckConfig { max_coords: 400, ..Default::default() },
        )
        .unwrap();
        assert!(report.passes(1e-4), "{report:?}");
    }
}
