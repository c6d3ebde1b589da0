//! Measure prediction latency and the multiply-accumulate proxy of each head at full size
//! (d = H = D = 1024) on a batch of 64 rows. Untrained weights are enough for timing.
//!
//! ```bash
//! cargo run --release --example latency_report
//! ```

use uq_heads::eval::{flop_proxy, timing_benchmark};
use uq_heads::prelude::*;

fn main() -> Result<()> {
    let cfg = HeadConfig::new(1024);
    let mut rng = RngStream::new(3);
    let x = Matrix::from_vec(64, 1024, rng.normal_vec(64 * 1024))?;

    let mut dnn_ms = None;
    println!("{:>5} {:>12} {:>10} {:>14} {:>8}", "head", "mean ms", "std ms", "flop proxy", "vs dnn");
    for kind in HeadKind::ALL {
        let mut params = HeadParams::init(kind, &cfg, &mut rng)?;
        if let HeadParams::Sngp(p) = &mut params {
            p.reset_precision(cfg.ridge);
            uq_heads::heads::sngp_covariance_finalize(p)?;
        }
        let (mean, std) = timing_benchmark(&params, &cfg, &x, 10, &mut rng)?;
        let base = *dnn_ms.get_or_insert(mean);
        println!(
            "{:>5} {mean:>12.3} {std:>10.3} {:>14} {:>7.1}x",
            kind.to_string(),
            flop_proxy(kind, &cfg),
            mean / base
        );
    }
    Ok(())
}
