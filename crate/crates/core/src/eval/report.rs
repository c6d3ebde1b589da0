use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{accuracy, f1_binary, flop_proxy, timing_benchmark, variance_decile_report};
use crate::heads::{HeadKind, Model};
use crate::numerics::{Matrix, RngStream};
use crate::{Error, Result};

/// Test-set summary of one model. Accuracies are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub f1: f64,
    pub latency_ms_mean: f64,
    pub latency_ms_std: f64,
    pub k_samples_used: usize,
    pub top_decile_accuracy: f64,
    pub bottom_decile_accuracy: f64,
    pub mean_variance: f64,
    pub flop_proxy: u64,
    pub wall_seconds: f64,
}

/// Predicts on `x` and fills a report.
///
/// With `timing_repeats = Some(r)` the latency fields come from [`timing_benchmark`] and
/// `wall_seconds` is the duration of the scoring pass. With `None` all three stay 0, which
/// makes the report a pure function of model, data and seed.
pub fn evaluate(
    model: &Model,
    x: &Matrix,
    labels: &[u8],
    timing_repeats: Option<usize>,
    rng: &mut RngStream,
) -> Result<EvalReport> {
    let started = Instant::now();
    let preds = model.predict(x, rng)?;
    let wall = started.elapsed().as_secs_f64();
    let hard: Vec<u8> = preds.iter().map(|p| p.label).collect();
    let deciles = variance_decile_report(&preds, labels)?;
    let (latency_ms_mean, latency_ms_std, wall_seconds) = match timing_repeats {
        Some(r) => {
            let (m, s) = timing_benchmark(&model.params, &model.config, x, r, rng)?;
            (m, s, wall)
        }
        None => (0.0, 0.0, 0.0),
    };
    Ok(EvalReport {
        accuracy: accuracy(&hard, labels)?,
        f1: f1_binary(&hard, labels)?,
        latency_ms_mean,
        latency_ms_std,
        k_samples_used: match model.kind() {
            HeadKind::Bnn => model.config.k_samples,
            _ => 1,
        },
        top_decile_accuracy: deciles.top_decile_accuracy,
        bottom_decile_accuracy: deciles.bottom_decile_accuracy,
        mean_variance: deciles.mean_variance,
        flop_proxy: flop_proxy(model.kind(), &model.config),
        wall_seconds,
    })
}

/// Writes the report as pretty JSON, keys in declaration order.
pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Terminal table with one row per `(label, report)`; accuracies are shown as percentages.
///
/// ```
/// # use uq_heads::eval::{render_decile_table, EvalReport};
/// # let r = EvalReport { accuracy: 0.9, f1: 0.9, latency_ms_mean: 0.0, latency_ms_std: 0.0,
/// #     k_samples_used: 1, top_decile_accuracy: 0.95745, bottom_decile_accuracy: 0.95745,
/// #     mean_variance: 0.005, flop_proxy: 0, wall_seconds: 0.0 };
/// let table = render_decile_table(&[("sngp", &r)]);
/// assert!(table.contains("95.745"));
/// ```
pub fn render_decile_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(5);
    let mut out = format!(
        "{:<width$}  {:>9}  {:>9}  {:>13}\n",
        "Model", "Top 10%", "Bot 10%", "Mean variance"
    );
    for (label, r) in rows {
        out.push_str(&format!(
            "{:<width$}  {:>9.3}  {:>9.3}  {:>13.5}\n",
            label,
            r.top_decile_accuracy * 100.0,
            r.bottom_decile_accuracy * 100.0,
            r.mean_variance
        ));
    }
    out
}
