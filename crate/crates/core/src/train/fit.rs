use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{argmax, backward_into, HanModel, StepResult};
use crate::nn::{adam_step, AdamConfig, AdamState, ParamSet};

use super::config::Hyperparams;
use super::metrics::evaluate;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean train-mode loss over the epoch's examples.
    pub train_loss: f64,
    /// Train-mode (dropout on) accuracy accumulated during the epoch.
    pub train_acc: f64,
    /// Eval-mode accuracy on the validation set after the epoch.
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_acc,val_acc\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:?},{:?},{:?}", e.epoch, e.train_loss, e.train_acc, e.val_acc);
        }
        s
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Dropout generator for one example: a fixed function of the seed, the
/// epoch and the example's dataset index, so results do not depend on how
/// a batch is scheduled across threads.
fn example_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

fn check_dataset(model: &HanModel, data: &Dataset, what: &str) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty(format!("{what} set is empty")));
    }
    let expected = model.config.window_len();
    for (i, w) in data.windows.iter().enumerate() {
        if w.samples.len() != expected {
            return Err(Error::Shape(format!(
                "{what} window {i} has {} samples, model expects {expected}",
                w.samples.len()
            )));
        }
        if w.label >= model.config.num_classes {
            return Err(Error::Config(format!(
                "{what} window {i} has label {} but the model has {} classes",
                w.label, model.config.num_classes
            )));
        }
    }
    Ok(())
}

fn locate(err: Error, epoch: usize, batch: usize) -> Error {
    match err {
        Error::NonFinite(msg) => Error::NonFinite(format!("epoch {epoch}, batch {batch}: {msg}")),
        other => other,
    }
}

/// Per-example gradients summed in batch order into `total`.
fn batch_gradients(
    model: &HanModel,
    data: &Dataset,
    batch: &[usize],
    seed: u64,
    epoch: usize,
    scratch: &mut HanModel,
    total: &mut HanModel,
) -> Result<Vec<StepResult>> {
    total.fill_zero();
    let run = |i: usize, g: &mut HanModel| {
        let w = &data.windows[i];
        backward_into(model, &w.samples, w.label, &mut example_rng(seed, epoch, i), g)
    };
    if rayon::current_num_threads() <= 1 {
        let mut steps = Vec::with_capacity(batch.len());
        for &i in batch {
            scratch.fill_zero();
            steps.push(run(i, scratch)?);
            total.accumulate(scratch)?;
        }
        return Ok(steps);
    }
    let per_example: Vec<(StepResult, HanModel)> = batch
        .par_iter()
        .map(|&i| {
            let mut g = model.zeros_like();
            run(i, &mut g).map(|s| (s, g))
        })
        .collect::<Result<_>>()?;
    let mut steps = Vec::with_capacity(batch.len());
    for (s, g) in per_example {
        total.accumulate(&g)?;
        steps.push(s);
    }
    Ok(steps)
}

/// [`train_with`] without progress reporting.
pub fn train(
    model: &HanModel,
    train_set: &Dataset,
    val_set: &Dataset,
    hp: &Hyperparams,
) -> Result<(HanModel, TrainHistory)> {
    train_with(model, train_set, val_set, hp, |_| {})
}

/// Mini-batch Adam on the mean cross-entropy of each batch, for exactly
/// `hp.epochs` epochs. The batch order is reshuffled every epoch from
/// `hp.seed`. Returns the model after the last epoch.
///
/// Gradients are computed per example and summed in batch order, so the
/// result is bit-identical for any rayon pool size.
pub fn train_with<F: FnMut(&EpochStats)>(
    model: &HanModel,
    train_set: &Dataset,
    val_set: &Dataset,
    hp: &Hyperparams,
    mut on_epoch: F,
) -> Result<(HanModel, TrainHistory)> {
    hp.validate()?;
    check_dataset(model, train_set, "training")?;
    check_dataset(model, val_set, "validation")?;

    let mut model = model.clone();
    model.config.dropout_rate = hp.dropout_rate;
    let mut adam = AdamState::new(&model, AdamConfig::new(hp.learning_rate));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(hp.seed);
    shuffle_rng.set_stream(1);
    let mut scratch = model.zeros_like();
    let mut total = model.zeros_like();
    let mut history = TrainHistory::default();

    for epoch in 1..=hp.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, batch) in order.chunks(hp.batch_size).enumerate() {
            let steps = batch_gradients(&model, train_set, batch, hp.seed, epoch, &mut scratch, &mut total)
                .map_err(|e| locate(e, epoch, b))?;
            for (s, &i) in steps.iter().zip(batch) {
                if !s.loss.is_finite() {
                    return Err(Error::NonFinite(format!("epoch {epoch}, batch {b}: loss {} on example {i}", s.loss)));
                }
                loss_sum += s.loss;
                correct += usize::from(argmax(&s.probs) == train_set.windows[i].label);
            }
            total.scale(1.0 / batch.len() as f64);
            adam_step(&mut model, &total, &mut adam).map_err(|e| locate(e, epoch, b))?;
        }
        let n = train_set.len() as f64;
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / n,
            train_acc: correct as f64 / n,
            val_acc: evaluate(&model, val_set)?.accuracy,
        };
        on_epoch(&stats);
        history.epochs.push(stats);
    }
    Ok((model, history))
}
