//! Use predictive variance to route rows to review: train a BNN, sort the test rows by
//! variance and count how many of the most uncertain ones come from the noisy region.
//!
//! ```bash
//! cargo run --release --example rank_uncertain
//! ```

use uq_heads::prelude::*;

fn main() -> Result<()> {
    let set = synthetic::noisy_region(8, 2000, 0.15, 0.2, 5);
    let data = &set.dataset;
    let splits = split_dataset(data.n(), 5)?;
    let head_cfg = HeadConfig {
        hidden: 64,
        ..HeadConfig::new(data.dim())
    };
    let train_cfg = TrainConfig {
        learning_rate: 1e-2,
        max_epochs: 50,
        batch_size: 32,
        seed: 5,
        ..TrainConfig::default()
    };
    let (model, _) = train(HeadKind::Bnn, data, &splits, &head_cfg, &train_cfg)?;

    let x = data.embeddings().select_rows(&splits.test);
    let preds = model.predict(&x, &mut RngStream::new(5))?;
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].variance.total_cmp(&preds[a].variance));

    let base = splits.test.iter().filter(|&&i| set.noisy[i]).count() as f64 / splits.test.len() as f64;
    println!("noisy-region share of the test split: {:.1}%", 100.0 * base);
    for frac in [0.05, 0.1, 0.2, 0.5] {
        let k = ((frac * preds.len() as f64).ceil() as usize).max(1);
        let hits = order[..k].iter().filter(|&&j| set.noisy[splits.test[j]]).count();
        println!(
            "top {:>3.0}% by variance ({k:>3} rows): {:.1}% from the noisy region",
            100.0 * frac,
            100.0 * hits as f64 / k as f64
        );
    }
    Ok(())
}
