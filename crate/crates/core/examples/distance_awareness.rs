//! Distance awareness: probe SNGP and DNN heads with points far from the training data.
//! The SNGP variance grows back towards its prior away from the data; the DNN has no
//! variance and stays confident.
//!
//! ```bash
//! cargo run --release --example distance_awareness
//! ```

use uq_heads::numerics::norm2;
use uq_heads::prelude::*;

fn main() -> Result<()> {
    let data = synthetic::two_gaussians(4, 2000, 2.0, 31);
    let splits = split_dataset(data.n(), 31)?;
    let head_cfg = HeadConfig {
        hidden: 64,
        rff_dim: 256,
        ..HeadConfig::new(4)
    };
    let train_cfg = TrainConfig {
        learning_rate: 1e-2,
        max_epochs: 50,
        batch_size: 32,
        seed: 31,
        ..TrainConfig::default()
    };
    let (sngp, _) = train(HeadKind::Sngp, &data, &splits, &head_cfg, &train_cfg)?;
    let (dnn, _) = train(HeadKind::Dnn, &data, &splits, &head_cfg, &train_cfg)?;

    let mut rng = RngStream::new(99);
    println!("{:>8} {:>14} {:>10} {:>10}", "distance", "sngp variance", "sngp prob", "dnn prob");
    for scale in [0.0, 1.0, 3.0, 10.0, 30.0, 100.0] {
        let mut dir = rng.normal_vec(4);
        let n = norm2(&dir);
        dir.iter_mut().for_each(|v| *v *= scale / n);
        let x = Matrix::from_vec(1, 4, dir)?;
        let s = sngp.predict(&x, &mut rng)?[0];
        let d = dnn.predict(&x, &mut rng)?[0];
        println!("{scale:>8.1} {:>14.4e} {:>10.4} {:>10.4}", s.variance, s.prob_mean, d.prob_mean);
    }
    Ok(())
}
