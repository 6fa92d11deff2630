use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ecghan::data::{
    balance, preprocess_dir, split, synth_beat_dataset, synth_class_record, write_annotations, write_record,
    BalanceConfig, Dataset, PreprocessConfig, SampleFormat, AAMI_CLASSES, ANNOTATIONS_DIR, RECORDS_DIR,
};
use ecghan::explain::{export_report, extract_attention};
use ecghan::model::{load_weights, save_weights, HanModel};
use ecghan::train::{evaluate, grid_search_with, train_with, Grid, TrainConfig};

use crate::{Command, EvaluateArgs, ExplainArgs, GridArgs, PreprocessArgs, SynthArgs, TrainArgs};

macro_rules! progress {
    ($verb:expr, $($fmt:tt)+) => {
        eprintln!("[{}] {}", $verb, format_args!($($fmt)+))
    };
}

/// Tags a library error with the module it came from.
fn m<T>(module: &str, r: ecghan::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("{module}: {e}"))
}

pub fn run(command: Command, seed: Option<u64>) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a, seed.unwrap_or(0)),
        Command::Preprocess(a) => preprocess(a, seed.unwrap_or(0)),
        Command::Train(a) => train(a, seed),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Gridsearch(a) => gridsearch(a, seed),
        Command::Explain(a) => explain(a),
    }
}

fn synth(a: SynthArgs, seed: u64) -> Result<()> {
    if !(2..=AAMI_CLASSES.len()).contains(&a.classes) {
        bail!("synth: --classes must be between 2 and {}", AAMI_CLASSES.len());
    }
    let snr = (!a.clean).then_some(a.snr_db);
    let ann_dir = a.out.join(ANNOTATIONS_DIR);
    fs::create_dir_all(&ann_dir).with_context(|| format!("synth: creating {}", ann_dir.display()))?;
    for (class, name) in AAMI_CLASSES.iter().enumerate().take(a.classes) {
        let (record, ann) = m("data", synth_class_record(class, a.beats_per_class, snr, seed))?;
        let extra = BTreeMap::from([("label".to_string(), name.to_string())]);
        m("data", write_record(&record, &a.out.join(RECORDS_DIR), SampleFormat::F32Le, &extra))?;
        m("data", write_annotations(&ann, &ann_dir.join(format!("{}.csv", record.record_id))))?;
        progress!("synth", "{}: {} samples, {} beats", record.record_id, record.samples.len(), ann.len());
    }
    let ds = m("data", synth_beat_dataset(a.classes, a.beats_per_class, snr, seed))?;
    m("data", ds.save(&a.out))?;
    progress!("synth", "{} windows written to {}", ds.len(), a.out.display());
    Ok(())
}

fn parse_ratios(text: &str) -> Result<(f64, f64, f64)> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("--split '{text}' is not a list of numbers"))?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => bail!("--split needs three ratios, got '{text}'"),
    }
}

fn preprocess(a: PreprocessArgs, seed: u64) -> Result<()> {
    let ratios = parse_ratios(&a.split)?;
    let len = a.before + a.after;
    if a.segments == 0 || !len.is_multiple_of(a.segments) {
        bail!("preprocess: a window of {len} samples does not split into {} segments", a.segments);
    }
    let cfg = PreprocessConfig {
        before: a.before,
        after: a.after,
        use_annotations: a.use_annotations,
        denoise: if a.no_denoise { None } else { PreprocessConfig::default().denoise },
        lead: a.lead.clone(),
        ..PreprocessConfig::default()
    };
    let (ds, summaries) = m("data", preprocess_dir(&a.data, &cfg))?;
    for s in &summaries {
        progress!(
            "preprocess",
            "{}: {} peaks, {} windows, {} at the edges, {} unlabeled",
            s.record_id,
            s.peaks,
            s.windows,
            s.boundary_skipped,
            s.unlabeled
        );
    }
    m("data", ds.save(&a.out))?;
    let (mut tr, va, te) = m("data", split(&ds, ratios, seed))?;
    if a.balance {
        let bc = BalanceConfig {
            majority_target: a.majority_target,
            minority_total: a.minority_total,
            k: a.smote_k,
            seed,
            ..BalanceConfig::default()
        };
        let before = tr.class_counts();
        tr = m("data", balance(&tr, &bc))?;
        progress!("preprocess", "balanced training split {before:?} -> {:?}", tr.class_counts());
    }
    for (name, part) in [("train", &tr), ("val", &va), ("test", &te)] {
        m("data", part.save(&a.out.join(name)))?;
    }
    progress!(
        "preprocess",
        "{} windows ({:?} per class); train {}, val {}, test {}",
        ds.len(),
        ds.class_counts(),
        tr.len(),
        va.len(),
        te.len()
    );
    Ok(())
}

/// `dir/part` when `dir` is a preprocessing output, else `dir` itself.
fn dataset_in(dir: &Path, part: &str) -> PathBuf {
    let sub = dir.join(part);
    if sub.join("dataset.cfg").exists() {
        sub
    } else {
        dir.to_path_buf()
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = match path {
        Some(p) => m("train", TrainConfig::load(p))?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.hyper.seed = s;
    }
    Ok(cfg)
}

fn train(a: TrainArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref(), seed)?;
    if let Some(n) = a.segments {
        m("model", cfg.model.set("num_segments", &n.to_string()))?;
    }
    if let Some(e) = a.epochs {
        cfg.hyper.epochs = e;
    }
    m("train", cfg.validate())?;
    let tr = m("data", Dataset::load(&a.data.join("train")))?;
    let va = m("data", Dataset::load(&a.data.join("val")))?;
    let model = m("model", HanModel::build(&cfg.model, cfg.hyper.seed))?;
    progress!("train", "{} parameters; {} training and {} validation windows", model.param_count(), tr.len(), va.len());
    let (trained, history) = m(
        "train",
        train_with(&model, &tr, &va, &cfg.hyper, |e| {
            progress!(
                "train",
                "epoch {}/{}: loss {:.4}, train acc {:.4}, val acc {:.4}",
                e.epoch,
                cfg.hyper.epochs,
                e.train_loss,
                e.train_acc,
                e.val_acc
            )
        }),
    )?;
    m("model", save_weights(&trained, &a.out))?;
    let history_path = a.history.unwrap_or_else(|| a.out.with_extension("history.csv"));
    fs::write(&history_path, history.to_csv()).with_context(|| format!("train: writing {}", history_path.display()))?;
    let last = history.last().map_or(0.0, |e| e.val_acc);
    progress!("train", "model written to {}", a.out.display());
    println!("val_acc,{last:?}");
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = m("model", load_weights(&a.model))?;
    let ds = m("data", Dataset::load(&dataset_in(&a.data, "test")))?;
    let metrics = m("train", evaluate(&model, &ds))?;
    progress!("evaluate", "{} windows", ds.len());
    println!("accuracy,{:?}", metrics.accuracy);
    print!("{}", metrics.confusion_csv(&ds.class_names));
    Ok(())
}

fn gridsearch(a: GridArgs, seed: Option<u64>) -> Result<()> {
    let base = load_config(a.config.as_deref(), seed)?;
    let grid = m("train", Grid::load(&a.grid))?;
    let tr = m("data", Dataset::load(&a.data.join("train")))?;
    let va = m("data", Dataset::load(&a.data.join("val")))?;
    progress!("gridsearch", "{} configurations", grid.len());
    let result = m(
        "train",
        grid_search_with(&base, &grid, &tr, &va, |e| {
            progress!("gridsearch", "config {}: val acc {:.4} ({})", e.config_id, e.val_acc, e.values.join(","))
        }),
    )?;
    fs::write(&a.out, result.leaderboard_csv()).with_context(|| format!("gridsearch: writing {}", a.out.display()))?;
    if let Some(p) = &a.best_config {
        fs::write(p, result.best.to_text()).with_context(|| format!("gridsearch: writing {}", p.display()))?;
    }
    println!("best_config,{}", result.best_id);
    Ok(())
}

fn explain(a: ExplainArgs) -> Result<()> {
    let model = m("model", load_weights(&a.model))?;
    let ds = m("data", Dataset::load(&dataset_in(&a.data, "test")))?;
    for &i in &a.indices {
        let w = ds.windows.get(i).ok_or_else(|| anyhow!("explain: window {i} out of range ({} windows)", ds.len()))?;
        let report = m("explain", extract_attention(&model, &w.samples, &w.source_record, i))?;
        let paths = m("explain", export_report(&report, &a.out))?;
        let top = report.top_attention_range();
        progress!(
            "explain",
            "window {i} ({}): predicted {}, strongest field {}..{}",
            w.source_record,
            ds.class_names.get(report.predicted).map_or("?", String::as_str),
            top.start,
            top.end
        );
        for p in paths {
            println!("{}", p.display());
        }
    }
    Ok(())
}
