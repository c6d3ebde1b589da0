use crate::heads::UncertainPrediction;
use crate::{Error, Result};

fn check_pair(preds: &[u8], labels: &[u8]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Argument("metrics need at least one prediction".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Fraction of positions where `preds` and `labels` agree.
pub fn accuracy(preds: &[u8], labels: &[u8]) -> Result<f64> {
    check_pair(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// F1 of the positive class; 0 when precision and recall are both 0.
pub fn f1_binary(preds: &[u8], labels: &[u8]) -> Result<f64> {
    check_pair(preds, labels)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &y) in preds.iter().zip(labels) {
        match (p == 1, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecileReport {
    /// Accuracy on the `ceil(n/10)` rows with the highest variance.
    pub top_decile_accuracy: f64,
    /// Accuracy on the `ceil(n/10)` rows with the lowest variance.
    pub bottom_decile_accuracy: f64,
    /// Mean variance over all rows.
    pub mean_variance: f64,
    pub decile_size: usize,
}

/// Accuracy on the most and least uncertain tenth of the predictions.
///
/// Rows are sorted by variance ascending, ties kept in index order.
pub fn variance_decile_report(preds: &[UncertainPrediction], labels: &[u8]) -> Result<DecileReport> {
    let n = preds.len();
    if n < 10 {
        return Err(Error::Argument(format!("decile report needs at least 10 predictions, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!("{n} predictions for {} labels", labels.len())));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| preds[a].variance.total_cmp(&preds[b].variance));
    let k = n.div_ceil(10);
    let acc = |rows: &[usize]| {
        rows.iter().filter(|&&i| preds[i].label == labels[i]).count() as f64 / rows.len() as f64
    };
    Ok(DecileReport {
        top_decile_accuracy: acc(&order[n - k..]),
        bottom_decile_accuracy: acc(&order[..k]),
        mean_variance: preds.iter().map(|p| p.variance).sum::<f64>() / n as f64,
        decile_size: k,
    })
}
