//! Metrics, variance-decile analysis, latency benchmarking and reports.

mod metrics;
mod report;
mod timing;

pub use metrics::{accuracy, f1_binary, variance_decile_report, DecileReport};
pub use report::{evaluate, read_report, render_decile_table, write_report, EvalReport};
pub use timing::{flop_proxy, timing_benchmark};
