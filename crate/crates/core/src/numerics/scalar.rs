use crate::{Error, Result};

/// Logistic sigmoid without overflow for any finite input.
#[inline]
pub fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)`, strictly positive for finite `x`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`]; `y` must be positive.
pub fn inv_softplus(y: f64) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("inv_softplus requires y > 0, got {y}")));
    }
    // y + ln(1 − e^{−y})
    Ok(y + (-(-y).exp_m1()).ln())
}
