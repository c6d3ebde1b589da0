use std::time::Instant;

use crate::heads::{predict_with_uncertainty, HeadConfig, HeadKind, HeadParams};
use crate::numerics::{Matrix, RngStream};
use crate::{Error, Result};

/// Wall-clock latency of one `predict_with_uncertainty` call on the whole batch `x`, in
/// milliseconds: `(mean, sample std)` over `repeats` timed runs after one untimed warmup.
/// BNN runs include all `K` sampled forwards.
pub fn timing_benchmark(
    params: &HeadParams,
    cfg: &HeadConfig,
    x: &Matrix,
    repeats: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if repeats < 2 {
        return Err(Error::Argument(format!("timing needs at least 2 repeats, got {repeats}")));
    }
    std::hint::black_box(predict_with_uncertainty(params, cfg, x, rng)?);
    let mut ms = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        std::hint::black_box(predict_with_uncertainty(params, cfg, x, rng)?);
        ms.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let mean = ms.iter().sum::<f64>() / repeats as f64;
    let var = ms.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64;
    Ok((mean, var.sqrt()))
}

/// Multiply-accumulate count of one prediction.
///
/// | head | count |
/// |------|-------|
/// | DNN  | `d·H + H` |
/// | BNN  | `K·(d·H + H) + d·H + H` |
/// | SNGP | `d·H + H·D + D + D²` |
pub fn flop_proxy(kind: HeadKind, cfg: &HeadConfig) -> u64 {
    let (d, h, dd, k) = (
        cfg.input_dim as u64,
        cfg.hidden as u64,
        cfg.rff_dim as u64,
        cfg.k_samples as u64,
    );
    let dense = d * h + h;
    match kind {
        HeadKind::Dnn => dense,
        HeadKind::Bnn => k * dense + dense,
        HeadKind::Sngp => d * h + h * dd + dd + dd * dd,
    }
}
