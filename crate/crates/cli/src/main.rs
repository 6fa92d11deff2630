//! `ecghan` command-line entry point.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "ecghan",
    version,
    about = "Single-lead ECG beat classification with a hierarchical attention network"
)]
struct Cli {
    /// Seed for every random choice (synthesis, splits, balancing, init, shuffling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-record preprocessing, batch gradients and grid search.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic per-class records, annotations and a windowed dataset.
    Synth(SynthArgs),
    /// Denoise, detect or read R-peaks, cut and label windows, split and optionally balance.
    Preprocess(PreprocessArgs),
    /// Train a model on `<data>/train`, validating on `<data>/val`.
    Train(TrainArgs),
    /// Print accuracy and the confusion matrix of a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Train every configuration of a grid and write the leaderboard.
    Gridsearch(GridArgs),
    /// Export per-window attention as CSV and SVG.
    Explain(ExplainArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    beats_per_class: usize,
    /// Additive noise level in dB.
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    /// No additive noise.
    #[arg(long, conflicts_with = "snr_db")]
    clean: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Directory with `records/` and optionally `annotations/`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Samples kept before each R-peak.
    #[arg(long, default_value_t = 99)]
    before: usize,
    /// Samples kept from the R-peak on.
    #[arg(long, default_value_t = 201)]
    after: usize,
    /// The window length must split evenly into this many segments.
    #[arg(long, default_value_t = 10)]
    segments: usize,
    /// Only use records of this lead.
    #[arg(long)]
    lead: Option<String>,
    /// Take R-peaks from the annotation files instead of the detector.
    #[arg(long)]
    use_annotations: bool,
    #[arg(long)]
    no_denoise: bool,
    /// Train/validation/test ratios.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    split: String,
    /// Undersample the majority class and SMOTE the minorities of the training split.
    #[arg(long)]
    balance: bool,
    #[arg(long, default_value_t = 50_000, requires = "balance")]
    majority_target: usize,
    #[arg(long, requires = "balance")]
    minority_total: Option<usize>,
    #[arg(long, default_value_t = 5, requires = "balance")]
    smote_k: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training config file (`key=value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preprocessed directory with `train/` and `val/`.
    #[arg(long)]
    data: PathBuf,
    /// Weight file to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch history CSV; defaults to the weight path with a `.history.csv` extension.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Preprocessed directory (its `test/` split is used) or a dataset directory.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Base training config; grid values override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid file with `key=v1,v2,...` lines.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Leaderboard CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the winning configuration here.
    #[arg(long)]
    best_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    /// Preprocessed directory (its `test/` split is used) or a dataset directory.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Window indices to export.
    #[arg(long = "index", default_values_t = [0usize])]
    indices: Vec<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs as usize).build_global() {
        eprintln!("ecghan: cannot start {} worker threads: {e}", cli.jobs);
        return ExitCode::FAILURE;
    }
    match commands::run(cli.command, cli.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ecghan: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
