//! Power iteration against an exact singular value, and the spectral bound that SNGP
//! enforces on its hidden layer.
//!
//! ```bash
//! cargo run --example spectral_normalization
//! ```

use uq_heads::heads::spectral_normalize;
use uq_heads::numerics::power_iteration;
use uq_heads::prelude::*;

fn main() -> Result<()> {
    // diag(3, 2, 1) padded with a zero row: largest singular value 3
    let w = Matrix::from_rows(&[
        vec![3.0, 0.0, 0.0],
        vec![0.0, 2.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, 0.0],
    ])?;
    let mut rng = RngStream::new(1);
    for iters in [1, 2, 5, 20] {
        let est = power_iteration(&w, iters, &mut rng);
        println!("{iters:>3} iterations: sigma = {:.8}", est.sigma);
    }

    let cfg = HeadConfig {
        hidden: 32,
        rff_dim: 16,
        ..HeadConfig::new(8)
    };
    let HeadParams::Sngp(mut p) = HeadParams::init(HeadKind::Sngp, &cfg, &mut rng)? else {
        unreachable!()
    };
    p.w_hid.scale(10.0);
    let before = power_iteration(&p.w_hid, 200, &mut rng).sigma;
    spectral_normalize(&mut p, &cfg, &mut rng);
    let after = power_iteration(&p.w_hid, 200, &mut rng).sigma;
    println!("hidden layer: sigma {before:.4} -> {after:.4} (bound {})", cfg.spectral_bound);
    Ok(())
}
