//! Build the SNGP Laplace posterior by hand: accumulate `s·I + Σ p(1-p)·φφᵀ` batch by
//! batch, invert it, and read off the predictive variance `φᵀΣφ` on and off the data.
//!
//! ```bash
//! cargo run --release --example laplace_covariance
//! ```

use uq_heads::heads::{sngp_covariance_finalize, sngp_precision_update};
use uq_heads::numerics::stable_sigmoid;
use uq_heads::prelude::*;

fn main() -> Result<()> {
    let data = synthetic::two_gaussians(2, 400, 3.0, 4);
    let cfg = HeadConfig {
        hidden: 16,
        rff_dim: 64,
        ..HeadConfig::new(2)
    };
    let mut rng = RngStream::new(4);
    let HeadParams::Sngp(mut p) = HeadParams::init(HeadKind::Sngp, &cfg, &mut rng)? else {
        unreachable!()
    };

    p.reset_precision(cfg.ridge);
    let idx: Vec<usize> = (0..data.n()).collect();
    for chunk in idx.chunks(50) {
        let x = data.embeddings().select_rows(chunk);
        let phi = p.features(&x)?;
        let probs: Vec<f64> = phi.matvec(&p.beta).into_iter().map(stable_sigmoid).collect();
        sngp_precision_update(&mut p, &phi, &probs)?;
    }
    sngp_covariance_finalize(&mut p)?;
    let cov = p.covariance.as_ref().unwrap();
    println!("covariance {}x{}, symmetric: {}", cov.rows(), cov.cols(), cov.is_symmetric(1e-12));

    let probes = Matrix::from_rows(&[vec![1.5, 1.5], vec![-1.5, -1.5], vec![0.0, 0.0], vec![8.0, -8.0]])?;
    let preds = predict_with_uncertainty(&HeadParams::Sngp(p), &cfg, &probes, &mut rng)?;
    for (i, pr) in preds.iter().enumerate() {
        println!("probe {:?}: variance {:.4e}", probes.row(i), pr.variance);
    }
    Ok(())
}
