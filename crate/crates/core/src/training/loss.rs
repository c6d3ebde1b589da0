use crate::numerics::{softplus, stable_sigmoid};
use crate::{Error, Result};

/// Mean binary cross-entropy on logits and its gradient with respect to each logit.
///
/// Uses `softplus(−z)` for positives and `softplus(z)` for negatives so saturated logits lose
/// no precision.
pub fn bce_loss(logits: &[f64], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
    if logits.is_empty() {
        return Err(Error::Argument("bce_loss on an empty batch".into()));
    }
    if logits.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} logits vs {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        let (l, target) = match y {
            0 => (softplus(z), 0.0),
            1 => (softplus(-z), 1.0),
            other => return Err(Error::Argument(format!("label {other} is not binary"))),
        };
        loss += l;
        grad.push((stable_sigmoid(z) - target) / n);
    }
    Ok((loss / n, grad))
}

/// Mini-batch evidence lower bound objective: data loss plus the KL term spread over the
/// training set.
pub fn elbo_objective(bce: f64, kl: f64, n_train: usize) -> Result<f64> {
    if n_train == 0 {
        return Err(Error::Argument("n_train must be at least 1".into()));
    }
    Ok(bce + kl / n_train as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn zero_logit_positive_label() {
        let (l, g) = bce_loss(&[0.0], &[1]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!((g[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn saturated_logit() {
        let (l, _) = bce_loss(&[40.0], &[1]).unwrap();
        assert!(l < 1e-10);
        let (l, _) = bce_loss(&[-40.0], &[0]).unwrap();
        assert!(l < 1e-10);
    }

    #[test]
    fn matches_naive_form() {
        let mut rng = RngStream::new(11);
        let z: Vec<f64> = (0..64).map(|_| rng.uniform_range(-20.0, 20.0)).collect();
        let y: Vec<u8> = (0..64).map(|_| (rng.next_u64() & 1) as u8).collect();
        let naive: f64 = z
            .iter()
            .zip(&y)
            .map(|(&z, &y)| {
                let p = 1.0 / (1.0 + (-z).exp());
                let y = y as f64;
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 64.0;
        let (l, _) = bce_loss(&z, &y).unwrap();
        assert!((l - naive).abs() < 1e-10, "{l} vs {naive}");
    }

    #[test]
    fn errors() {
        assert!(matches!(bce_loss(&[], &[]), Err(Error::Argument(_))));
        assert!(matches!(bce_loss(&[0.0], &[2]), Err(Error::Argument(_))));
        assert!(matches!(bce_loss(&[0.0, 1.0], &[1]), Err(Error::Dimension(_))));
    }

    #[test]
    fn elbo_arithmetic() {
        assert_eq!(elbo_objective(0.7, 0.0, 10).unwrap(), 0.7);
        assert!((elbo_objective(0.5, 100.0, 1000).unwrap() - 0.6).abs() < 1e-15);
        assert!(elbo_objective(0.5, 1.0, 0).is_err());
    }
}
