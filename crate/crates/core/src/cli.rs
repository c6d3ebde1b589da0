//! Command-line pipeline: `train`, `eval`, `predict` and `rank`.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data or format error, 3 numerical or
//! training failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{read_dataset, split_dataset, EmbeddingDataset};
use crate::eval::{evaluate, render_decile_table, write_report};
use crate::heads::{read_model, write_model, HeadConfig, HeadKind, Model, UncertainPrediction};
use crate::numerics::{streams, RngStream};
use crate::training::{parse_config, train, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "uq-heads", version, about = "Uncertainty-aware classification heads over text embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a head on the 64/16/20 split and write the model plus `<out>.history.json`.
    Train(TrainArgs),
    /// Evaluate on the test split, write a JSON report and print the decile table.
    Eval(EvalArgs),
    /// Write one JSON line of prediction, variance and label per input row.
    Predict(PredictArgs),
    /// Print the most and least uncertain rows.
    Rank(RankArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = parse_head)]
    pub head: HeadKind,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// `key = value` file with training and head settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
    /// Timed prediction runs for the latency fields; 0 skips timing and leaves them at 0.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Evaluate even if `--seed` differs from the seed the model was trained with.
    #[arg(long)]
    pub allow_seed_mismatch: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for BNN sampling; defaults to the training seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub top: usize,
    #[arg(long)]
    pub bottom: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_head(s: &str) -> std::result::Result<HeadKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::Config(_) => 1,
        Error::Dimension(_)
        | Error::NonFinite(_)
        | Error::Format { .. }
        | Error::Version { .. }
        | Error::Io { .. }
        | Error::Json(_) => 2,
        Error::Domain(_) | Error::State(_) | Error::Numerical(_) | Error::Training { .. } => 3,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
/// Normal output goes to stdout, errors to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Predict(a) => cmd_predict(a),
        Command::Rank(a) => cmd_rank(a, out),
    }
}

/// Path of the history written next to a model file.
pub fn history_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".history.json");
    PathBuf::from(s)
}

fn load_labeled(path: &Path) -> Result<(EmbeddingDataset, Vec<u8>)> {
    let ds = read_dataset(path)?;
    ds.check_finite()?;
    let labels = ds
        .labels()
        .ok_or_else(|| Error::format(path, "dataset has no labels"))?
        .to_vec();
    Ok((ds, labels))
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let ds = read_dataset(&a.embeddings)?;
    let mut train_cfg = TrainConfig::default();
    let mut head_cfg = HeadConfig::new(ds.dim());
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_config(&text, &mut train_cfg, &mut head_cfg)?;
    }
    train_cfg.seed = a.seed;
    let splits = split_dataset(ds.n(), a.seed)?;
    let (model, history) = train(a.head, &ds, &splits, &head_cfg, &train_cfg)?;
    write_model(&a.out, &model)?;
    let hist_path = history_path(&a.out);
    let mut text = serde_json::to_string_pretty(&history)?;
    text.push('\n');
    std::fs::write(&hist_path, text).map_err(|e| Error::io(&hist_path, e))?;
    writeln!(
        out,
        "{} head: {} epochs ({:?}), best epoch {} with validation loss {:.6}",
        a.head,
        history.epochs(),
        history.stop_reason,
        history.best_epoch,
        history.val_loss[history.best_epoch - 1]
    )
    .map_err(io_err)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = read_model(&a.model)?;
    if model.train_seed != a.seed && !a.allow_seed_mismatch {
        return Err(Error::Argument(format!(
            "model was trained with seed {} but --seed is {}; the test split would overlap \
             training rows (pass --allow-seed-mismatch to evaluate anyway)",
            model.train_seed, a.seed
        )));
    }
    let (ds, labels) = load_labeled(&a.embeddings)?;
    let splits = split_dataset(ds.n(), a.seed)?;
    let x = ds.embeddings().select_rows(&splits.test);
    let y: Vec<u8> = splits.test.iter().map(|&i| labels[i]).collect();
    let mut rng = RngStream::new(a.seed).substream(streams::PREDICT);
    let timing = (a.repeats > 0).then_some(a.repeats);
    let report = evaluate(&model, &x, &y, timing, &mut rng)?;
    write_report(&report, &a.report)?;
    let label = model.kind().to_string();
    write!(out, "{}", render_decile_table(&[(label.as_str(), &report)])).map_err(io_err)?;
    writeln!(
        out,
        "accuracy {:.4}  f1 {:.4}  latency {:.3} ± {:.3} ms  flop proxy {}",
        report.accuracy, report.f1, report.latency_ms_mean, report.latency_ms_std, report.flop_proxy
    )
    .map_err(io_err)
}

fn predict_all(model_path: &Path, data_path: &Path, seed: Option<u64>) -> Result<Vec<UncertainPrediction>> {
    let model: Model = read_model(model_path)?;
    let ds = read_dataset(data_path)?;
    ds.check_finite()?;
    let mut rng = RngStream::new(seed.unwrap_or(model.train_seed)).substream(streams::PREDICT);
    model.predict(ds.embeddings(), &mut rng)
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let preds = predict_all(&a.model, &a.embeddings, a.seed)?;
    let mut text = String::new();
    for p in &preds {
        text.push_str(&serde_json::to_string(p)?);
        text.push('\n');
    }
    std::fs::write(&a.out, text).map_err(|e| Error::io(&a.out, e))
}

fn cmd_rank(a: RankArgs, out: &mut dyn Write) -> Result<()> {
    let preds = predict_all(&a.model, &a.embeddings, a.seed)?;
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&i, &j| preds[i].variance.total_cmp(&preds[j].variance));
    let top = a.top.min(preds.len());
    let bottom = a.bottom.min(preds.len());
    let line = |out: &mut dyn Write, i: usize| {
        let p = &preds[i];
        writeln!(out, "{:>8}  {:>10.6}  {:>14.6e}  {}", i, p.prob_mean, p.variance, p.label)
    };
    let header = |out: &mut dyn Write, title: &str| {
        writeln!(out, "{title}")?;
        writeln!(out, "{:>8}  {:>10}  {:>14}  label", "row", "prob", "variance")
    };
    header(out, "high uncertainty").map_err(io_err)?;
    for &i in order.iter().rev().take(top) {
        line(out, i).map_err(io_err)?;
    }
    header(out, "low uncertainty").map_err(io_err)?;
    for &i in order.iter().take(bottom) {
        line(out, i).map_err(io_err)?;
    }
    Ok(())
}
