//! Drive training from a `key = value` config file, the same format the `--config` flag of
//! the command-line tool reads.
//!
//! ```bash
//! cargo run --release --example config_file
//! ```

use uq_heads::training::parse_config;
use uq_heads::prelude::*;

const CONFIG: &str = "\
# desk-scale run
learning_rate = 0.01
max_epochs = 60
batch_size = 32
early_stop_patience = 5

hidden = 32
k_samples = 20     # more samples per BNN prediction
";

fn main() -> Result<()> {
    let data = synthetic::two_gaussians(8, 2000, 2.5, 2);
    let mut train_cfg = TrainConfig::default();
    let mut head_cfg = HeadConfig::new(data.dim());
    parse_config(CONFIG, &mut train_cfg, &mut head_cfg)?;
    train_cfg.seed = 2;
    println!("{train_cfg:?}");
    println!("{head_cfg:?}");

    let splits = split_dataset(data.n(), train_cfg.seed)?;
    let (_, history) = train(HeadKind::Bnn, &data, &splits, &head_cfg, &train_cfg)?;
    println!("\nepoch  train loss  val loss  lr");
    for e in 0..history.epochs() {
        println!(
            "{:>5}  {:>10.5}  {:>8.5}  {:.0e}",
            e + 1,
            history.train_loss[e],
            history.val_loss[e],
            history.learning_rate[e]
        );
    }
    println!("stopped: {:?}, best epoch {}", history.stop_reason, history.best_epoch);
    Ok(())
}
