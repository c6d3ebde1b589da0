//! Train all three heads on data with a label-noise region and print the variance-decile
//! table: accuracy on the 10% most confident rows, on the 10% least confident rows, and the
//! mean predictive variance.
//!
//! ```bash
//! cargo run --release --example compare_heads
//! ```

use uq_heads::eval::{evaluate, render_decile_table};
use uq_heads::prelude::*;

fn main() -> Result<()> {
    let set = synthetic::noisy_region(8, 2000, 0.15, 0.2, 11);
    let data = &set.dataset;
    let splits = split_dataset(data.n(), 11)?;
    let labels = data.labels().unwrap();
    let x = data.embeddings().select_rows(&splits.test);
    let y: Vec<u8> = splits.test.iter().map(|&i| labels[i]).collect();

    let head_cfg = HeadConfig {
        hidden: 64,
        rff_dim: 256,
        ..HeadConfig::new(data.dim())
    };
    let train_cfg = TrainConfig {
        learning_rate: 1e-2,
        max_epochs: 50,
        batch_size: 32,
        seed: 11,
        ..TrainConfig::default()
    };

    let mut reports = Vec::new();
    for kind in HeadKind::ALL {
        let (model, _) = train(kind, data, &splits, &head_cfg, &train_cfg)?;
        let report = evaluate(&model, &x, &y, Some(5), &mut RngStream::new(11))?;
        reports.push((kind.to_string(), report));
    }
    let rows: Vec<(&str, &EvalReport)> = reports.iter().map(|(k, r)| (k.as_str(), r)).collect();
    print!("{}", render_decile_table(&rows));
    println!();
    for (k, r) in &reports {
        println!("{k:>5}: accuracy {:.3}, f1 {:.3}, latency {:.3} ms", r.accuracy, r.f1, r.latency_ms_mean);
    }
    Ok(())
}
