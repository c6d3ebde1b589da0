use super::matrix::{norm2, Matrix};
use super::rng::RngStream;

/// Result of a power iteration: the top singular value estimate and its unit singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub sigma: f64,
    /// Left vector, length `rows`.
    pub u: Vec<f64>,
    /// Right vector, length `cols`.
    pub v: Vec<f64>,
}

/// Estimates the largest singular value of `w` from a random start.
///
/// A zero matrix yields `sigma = 0` with unit (but otherwise arbitrary) `u`, `v`.
pub fn power_iteration(w: &Matrix, iters: usize, rng: &mut RngStream) -> SpectralEstimate {
    let mut u = rng.normal_vec(w.rows());
    if normalize(&mut u) == 0.0 {
        u.iter_mut().for_each(|x| *x = 0.0);
        u[0] = 1.0;
    }
    power_iteration_from(w, &u, iters)
}

/// Power iteration warm-started from a previous left vector `u0`.
pub fn power_iteration_from(w: &Matrix, u0: &[f64], iters: usize) -> SpectralEstimate {
    assert!(w.rows() > 0 && w.cols() > 0, "power iteration needs nonzero dimensions");
    assert_eq!(u0.len(), w.rows());
    let iters = iters.max(1);
    let mut u = u0.to_vec();
    if normalize(&mut u) == 0.0 {
        u = unit(w.rows());
    }
    let mut v = unit(w.cols());
    for _ in 0..iters {
        let mut nv = w.matvec_t(&u);
        if normalize(&mut nv) == 0.0 {
            return SpectralEstimate { sigma: 0.0, u, v };
        }
        v = nv;
        let mut nu = w.matvec(&v);
        if normalize(&mut nu) == 0.0 {
            return SpectralEstimate { sigma: 0.0, u, v };
        }
        u = nu;
    }
    let wv = w.matvec(&v);
    let sigma = super::matrix::dot(&u, &wv);
    SpectralEstimate { sigma, u, v }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = norm2(x);
    if n > 0.0 && n.is_finite() {
        x.iter_mut().for_each(|e| *e /= n);
        n
    } else {
        0.0
    }
}

fn unit(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    e
}
