use ecghan::data::{split, synth_beat_dataset, Dataset};
use ecghan::model::{HanConfig, HanModel};
use ecghan::nn::ParamSet;
use ecghan::train::*;
use ecghan::Error;

fn small_config() -> HanConfig {
    HanConfig {
        num_segments: 4,
        segment_len: 15,
        conv_filters: 4,
        conv_kernel: 5,
        lstm_units: 8,
        fc_units: 16,
        ..HanConfig::default()
    }
}

/// Synthetic windows decimated by 5, so they fit the 60-sample small config.
fn small_dataset(beats_per_class: usize, seed: u64) -> Dataset {
    let mut ds = synth_beat_dataset(5, beats_per_class, Some(20.0), seed).unwrap();
    for w in &mut ds.windows {
        w.samples = w.samples.iter().step_by(5).copied().collect();
        w.r_peak_offset /= 5;
    }
    ds
}

fn bits(m: &HanModel) -> Vec<u64> {
    m.to_flat().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn zero_learning_rate_leaves_weights_unchanged() {
    let data = small_dataset(8, 1);
    let model = HanModel::build(&small_config(), 3).unwrap();
    let hp = Hyperparams { learning_rate: 0.0, epochs: 1, batch_size: 7, ..Hyperparams::default() };
    let (trained, history) = train(&model, &data, &data, &hp).unwrap();
    assert_eq!(bits(&trained), bits(&model));
    assert_eq!(history.epochs.len(), 1);
}

#[test]
fn identical_seeds_reproduce_weights_and_history() {
    let data = small_dataset(10, 2);
    let (tr, va, _) = split(&data, (0.6, 0.2, 0.2), 4).unwrap();
    let model = HanModel::build(&small_config(), 5).unwrap();
    let hp = Hyperparams { learning_rate: 0.01, epochs: 3, batch_size: 8, seed: 9, ..Hyperparams::default() };
    let (a, ha) = train(&model, &tr, &va, &hp).unwrap();
    let (b, hb) = train(&model, &tr, &va, &hp).unwrap();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(ha, hb);
    assert_eq!(ha.epochs.len(), 3);
    assert!(ha.epochs.iter().all(|e| e.train_loss.is_finite()));

    // A different seed changes the batch order and dropout masks.
    let (c, _) = train(&model, &tr, &va, &Hyperparams { seed: 10, ..hp.clone() }).unwrap();
    assert_ne!(bits(&a), bits(&c));

    // The rayon pool size does not change the reduction order.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (d, hd) = pool.install(|| train(&model, &tr, &va, &hp)).unwrap();
    assert_eq!(bits(&a), bits(&d));
    assert_eq!(ha, hd);
}

#[test]
fn history_csv_has_one_row_per_epoch() {
    let data = small_dataset(4, 3);
    let model = HanModel::build(&small_config(), 1).unwrap();
    let hp = Hyperparams { epochs: 4, ..Hyperparams::default() };
    let (_, history) = train(&model, &data, &data, &hp).unwrap();
    let csv = history.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,train_acc,val_acc");
    assert_eq!(lines.len(), 5);
    for (i, line) in lines[1..].iter().enumerate() {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols[0], (i + 1) as f64);
        assert_eq!(cols[1], history.epochs[i].train_loss);
    }
}

#[test]
fn non_finite_weights_abort_with_location() {
    let data = small_dataset(4, 3);
    let mut model = HanModel::build(&small_config(), 1).unwrap();
    model.fc.weights[0] = f64::NAN;
    let err = train(&model, &data, &data, &Hyperparams::default()).unwrap_err();
    assert!(matches!(err, Error::NonFinite(_)), "{err}");
    assert!(err.to_string().contains("epoch 1, batch 0"), "{err}");
}

#[test]
fn rejects_mismatched_data() {
    let data = synth_beat_dataset(5, 2, None, 0).unwrap();
    let model = HanModel::build(&small_config(), 1).unwrap();
    assert!(matches!(train(&model, &data, &data, &Hyperparams::default()), Err(Error::Shape(_))));
    let empty = data.empty_like();
    assert!(matches!(evaluate(&model, &empty), Err(Error::Empty(_))));
}

#[test]
fn evaluation_counting_laws() {
    let data = small_dataset(6, 4);
    let model = HanModel::build(&small_config(), 2).unwrap();
    let m = evaluate(&model, &data).unwrap();
    let counts = data.class_counts();
    for (row, &n) in m.confusion.iter().zip(&counts) {
        assert_eq!(row.iter().sum::<usize>(), n);
    }
    let trace: usize = (0..5).map(|k| m.confusion[k][k]).sum();
    assert_eq!(m.accuracy, trace as f64 / data.len() as f64);
    assert_eq!(evaluate(&model, &data).unwrap(), m);
}

#[test]
fn grid_search_picks_a_declared_maximum() {
    let data = small_dataset(8, 5);
    let (tr, va, _) = split(&data, (0.6, 0.2, 0.2), 1).unwrap();
    let base = TrainConfig {
        model: small_config(),
        hyper: Hyperparams { epochs: 3, batch_size: 8, ..Hyperparams::default() },
    };
    let grid = Grid::from_text("learning_rate=0.0,0.02\nlstm_units=4,8", "grid").unwrap();
    let result = grid_search(&base, &grid, &tr, &va).unwrap();
    assert_eq!(result.leaderboard.len(), 4);
    let best = &result.leaderboard[result.best_id];
    assert!(result.leaderboard.iter().all(|e| e.val_acc <= best.val_acc));
    assert!(grid.expand(&base).unwrap().contains(&result.best));

    // Retraining the winner reproduces its validation accuracy.
    let model = HanModel::build(&result.best.model, result.best.hyper.seed).unwrap();
    let (trained, _) = train(&model, &tr, &va, &result.best.hyper).unwrap();
    assert_eq!(evaluate(&trained, &va).unwrap().accuracy, best.val_acc);

    let csv = result.leaderboard_csv();
    assert!(csv.starts_with("config_id,val_acc,param_count,learning_rate,lstm_units\n"));
    assert_eq!(csv.lines().count(), 5);

    let single = Grid::from_text("learning_rate=0.01", "grid").unwrap();
    let r = grid_search(&base, &single, &tr, &va).unwrap();
    assert_eq!(r.best_id, 0);
    assert_eq!(r.best.hyper.learning_rate, 0.01);
}
