mod common;

use common::{model_check, tiny_config, INSTANCES};
use ecghan::model::*;
use ecghan::nn::{gradient_check, softmax_cross_entropy, GradCheckConfig, ParamSet};
use ecghan::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_window(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-5.0..5.0)).collect()
}

/// Parameter count recomputed from layer shapes.
fn closed_form_count(c: &HanConfig) -> usize {
    let dirs = if c.bidirectional { 2 } else { 1 };
    let h = c.lstm_units;
    let lstm = |d: usize| dirs * 4 * h * (d + h + 1);
    let width = dirs * h;
    let attn = width + 1;
    let conv = c.conv_filters * c.conv_kernel + c.conv_filters;
    let mut total = conv + lstm(c.conv_filters) + attn + lstm(width) + attn;
    if c.hierarchy_levels == 3 {
        total += lstm(width) + attn;
    }
    total + width * c.fc_units + c.fc_units + c.fc_units * c.num_classes + c.num_classes
}

#[test]
fn full_model_gradient_check_tiny_config() {
    for seed in 0..INSTANCES {
        let report = model_check(seed);
        assert!(report.max_rel_error <= 1e-4, "seed {seed}: {report:?}");
    }
}

#[test]
fn gradient_check_with_dropout_and_three_levels() {
    let cfg = HanConfig {
        num_segments: 4,
        group_size: 2,
        hierarchy_levels: 3,
        dropout_rate: 0.3,
        // Wide enough that no mask drops every pooled feature, which would
        // leave all FC units exactly at the ReLU kink.
        lstm_units: 8,
        ..tiny_config()
    };
    for seed in 0..5u64 {
        let model = HanModel::build(&cfg, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_window(cfg.window_len(), &mut rng);
        // The same generator state reproduces the same dropout mask.
        let mask_seed = 77 + seed;
        let (_, grads) = backward(&model, &x, 2, &mut ChaCha8Rng::seed_from_u64(mask_seed)).unwrap();
        let mut probe = model.clone();
        let report = gradient_check(
            |flat| {
                probe.copy_from_flat(flat)?;
                let p = forward(&probe, &x, true, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
                Ok(softmax_cross_entropy(&p.logits, 2)?.loss)
            },
            &model.to_flat(),
            &grads.to_flat(),
            &GradCheckConfig { max_coords: 300, seed, ..Default::default() },
        )
        .unwrap();
        assert!(report.max_rel_error <= 1e-4, "seed {seed}: {report:?}");
    }
}

#[test]
fn zero_output_layer_gives_bias_gradient_probs_minus_onehot() {
    let mut model = HanModel::build(&HanConfig::default(), 3).unwrap();
    model.output.weights.fill(0.0);
    model.output.bias = vec![0.3, -0.1, 0.0, 0.5, -0.7];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_window(300, &mut rng);
    let label = 3;
    let (_, grads) = backward(&model, &x, label, &mut rng).unwrap();
    // With zero weights the logits equal the bias, whatever the input.
    let z = &model.output.bias;
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - m).exp()).sum();
    for (k, g) in grads.output.bias.iter().enumerate() {
        let p = (z[k] - m).exp() / sum;
        let expected = p - if k == label { 1.0 } else { 0.0 };
        assert!((g - expected).abs() < 1e-12, "class {k}: {g} vs {expected}");
    }
    // Nothing upstream of a zero output layer receives gradient.
    assert!(grads.fc.weights.iter().all(|&v| v == 0.0));
    assert!(grads.conv.kernels.iter().all(|&v| v == 0.0));
}

#[test]
fn forward_laws_on_default_model() {
    let model = HanModel::build(&HanConfig::default(), 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let x = random_window(300, &mut rng);
        let a = forward(&model, &x, false, &mut rng).unwrap();
        let b = forward(&model, &x, false, &mut ChaCha8Rng::seed_from_u64(999)).unwrap();
        assert_eq!(a, b, "eval mode must ignore the generator");
        assert_eq!(a.probs.len(), 5);
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for w in a.attention.segment_weights.iter().chain([&a.attention.sequence_weights]) {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&v| v >= 0.0));
        }
    }
}

#[test]
fn build_is_deterministic_and_seed_sensitive() {
    let cfg = HanConfig::default();
    let a = HanModel::build(&cfg, 42).unwrap();
    let b = HanModel::build(&cfg, 42).unwrap();
    let c = HanModel::build(&cfg, 43).unwrap();
    let bits = |m: &HanModel| m.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn param_counts_follow_shapes() {
    let default = HanConfig::default();
    let variants = [
        default.clone(),
        HanConfig { hierarchy_levels: 3, ..default.clone() },
        HanConfig { bidirectional: true, ..default.clone() },
        HanConfig { lstm_units: 128, fc_units: 256, conv_stride: 2, ..default.clone() },
        tiny_config(),
    ];
    for cfg in variants {
        let m = HanModel::build(&cfg, 0).unwrap();
        assert_eq!(m.param_count(), closed_form_count(&cfg), "{cfg:?}");
    }
    assert_eq!(HanModel::build(&default, 0).unwrap().param_count(), 63_207);
    let doubled = HanConfig { lstm_units: 128, ..default.clone() };
    assert!(HanModel::build(&doubled, 0).unwrap().param_count() > 63_207);
}

#[test]
fn third_level_adds_one_lstm_and_one_attention_block() {
    let two = HanModel::build(&HanConfig::default(), 0).unwrap();
    let three = HanModel::build(&HanConfig { hierarchy_levels: 3, ..HanConfig::default() }, 0).unwrap();
    let names = |m: &HanModel| m.blocks().into_iter().map(|(n, _)| n).collect::<Vec<_>>();
    let (n2, n3) = (names(&two), names(&three));
    let extra: Vec<&String> = n3.iter().filter(|n| !n2.contains(n)).collect();
    assert_eq!(
        extra,
        ["group.lstm.w_ih", "group.lstm.w_hh", "group.lstm.bias", "group.attention.w", "group.attention.b"]
    );
    assert!(three.param_count() > two.param_count());
}

#[test]
fn weight_file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = HanConfig { hierarchy_levels: 3, dropout_rate: 0.35, ..HanConfig::default() };
    let model = HanModel::build(&cfg, 8).unwrap();
    let path = dir.path().join("m.hanw");
    save_weights(&model, &path).unwrap();
    let back = load_weights(&path).unwrap();
    assert_eq!(back.config, model.config);
    let bits = |m: &HanModel| m.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&model));

    let err = load_weights_expecting(&path, &HanConfig::default()).unwrap_err();
    assert!(matches!(err, Error::ConfigMismatch(ref m) if m.contains("hierarchy_levels")), "{err}");
    load_weights_expecting(&path, &cfg).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    let err = decode_weights(&bytes[..bytes.len() - 3]).unwrap_err();
    assert!(matches!(err, Error::Truncated { .. }), "{err}");
    assert!(matches!(decode_weights(&bytes[..2]).unwrap_err(), Error::Truncated { .. }));

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_weights(&bad).unwrap_err(), Error::WeightFormat(_)));
    let mut bad = bytes.clone();
    bad[4] = 9;
    let err = decode_weights(&bad).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
    let mut long = bytes;
    long.push(0);
    assert!(decode_weights(&long).is_err());
}

#[test]
fn loss_is_finite_for_random_inputs() {
    let model = HanModel::build(&HanConfig::default(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for label in 0..5 {
        let x = random_window(300, &mut rng);
        let (loss, grads) = backward(&model, &x, label, &mut rng).unwrap();
        assert!(loss.is_finite() && loss > 0.0);
        assert!(grads.to_flat().iter().all(|v| v.is_finite()));
    }
}
