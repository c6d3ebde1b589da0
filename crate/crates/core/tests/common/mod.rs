//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use uq_heads::heads::{HeadConfig, HeadParams, Tensors};
use uq_heads::numerics::{Matrix, RngStream};

/// Largest singular value of `w` from a cyclic Jacobi eigensolve of `wᵀw`.
pub fn jacobi_sigma_max(w: &Matrix) -> f64 {
    let n = w.cols();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..w.rows()).map(|r| w.get(r, i) * w.get(r, j)).sum()).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(0.0, f64::max).sqrt()
}

/// KL(N(μ, σ²) ‖ N(0, p²)) by composite Simpson quadrature over μ ± 12σ.
pub fn kl_quadrature(mu: f64, sigma: f64, prior: f64) -> f64 {
    let m = 20_000;
    let (a, b) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
    let h = (b - a) / m as f64;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let f = |w: f64| {
        let lq = -0.5 * ln2pi - sigma.ln() - 0.5 * ((w - mu) / sigma).powi(2);
        let lp = -0.5 * ln2pi - prior.ln() - 0.5 * (w / prior).powi(2);
        lq.exp() * (lq - lp)
    };
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Largest relative error between an analytic gradient and central differences of the
/// objective. The stream is cloned per evaluation so stochastic heads see identical noise.
pub fn max_fd_error(
    params: &HeadParams,
    grads: &dyn Tensors,
    cfg: &HeadConfig,
    x: &Matrix,
    labels: &[u8],
    rng: &RngStream,
    n_train: usize,
    step: f64,
) -> (f64, String) {
    let names: Vec<(&'static str, usize)> =
        params.as_tensors().tensors().iter().map(|(n, t)| (*n, t.len())).collect();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|(_, t)| t.to_vec()).collect();
    let mut worst = (0.0, String::new());
    for (ti, (name, len)) in names.iter().enumerate() {
        for k in 0..*len {
            let eval = |delta: f64| {
                let mut p = params.clone();
                p.as_tensors_mut().tensors_mut()[ti].1[k] += delta;
                p.objective(cfg, x, labels, &mut rng.clone(), n_train).unwrap()
            };
            let numeric = (eval(step) - eval(-step)) / (2.0 * step);
            let a = analytic[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{k}]: analytic {a:e}, numeric {numeric:e}"));
            }
        }
    }
    worst
}
