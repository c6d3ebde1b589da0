//! Train an SNGP head on a synthetic two-cluster set and print a few predictions with their
//! variances.
//!
//! ```bash
//! cargo run --release --example quickstart
//! ```

use uq_heads::prelude::*;

fn main() -> Result<()> {
    let data = synthetic::two_gaussians(4, 1000, 3.0, 7);
    let splits = split_dataset(data.n(), 7)?;

    let head_cfg = HeadConfig {
        hidden: 64,
        rff_dim: 256,
        ..HeadConfig::new(data.dim())
    };
    let train_cfg = TrainConfig {
        learning_rate: 1e-2,
        max_epochs: 30,
        batch_size: 32,
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, history) = train(HeadKind::Sngp, &data, &splits, &head_cfg, &train_cfg)?;
    println!(
        "trained for {} epochs, best validation loss {:.4} at epoch {}",
        history.epochs(),
        history.val_loss[history.best_epoch - 1],
        history.best_epoch
    );

    let x = data.embeddings().select_rows(&splits.test[..8]);
    let preds = model.predict(&x, &mut RngStream::new(0))?;
    let labels = data.labels().unwrap();
    println!("{:>6} {:>8} {:>12} {:>6}", "row", "prob", "variance", "true");
    for (p, &row) in preds.iter().zip(&splits.test) {
        println!("{row:>6} {:>8.4} {:>12.3e} {:>6}", p.prob_mean, p.variance, labels[row]);
    }
    Ok(())
}
