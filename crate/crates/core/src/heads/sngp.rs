//! Spectral-normalized neural Gaussian process head.
//!
//! `h = relu(W_hid x + b_hid)` with `‖W_hid‖₂ ≤ c`, then random Fourier features
//! `φ = sqrt(2/D) cos(W_rff h + b_rff)` approximating an RBF kernel with unit length scale,
//! and a linear output `logit = β·φ`. After training, a Laplace approximation gives the
//! posterior covariance `Σ = (s·I + Σᵢ pᵢ(1−pᵢ) φᵢφᵢᵀ)⁻¹` and the predictive variance `φᵀΣφ`.

use std::f64::consts::PI;

use super::{relu_inplace, HeadConfig, Tensors};
use crate::numerics::{
    dot, gemm, power_iteration, power_iteration_from, stable_sigmoid, Matrix, RngStream, Trans,
};
use crate::training::bce_loss;
use crate::{Error, Result};

/// Power iterations per normalization once `u` is warm.
pub const WARM_POWER_ITERS: usize = 1;
/// Power iterations for a cold start.
pub const COLD_POWER_ITERS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SngpParams {
    /// `hidden × d`
    pub w_hid: Matrix,
    /// Warm-start left singular vector of `w_hid` (all zeros until the first normalization).
    pub sn_u: Vec<f64>,
    /// Right singular vector matching `sn_u`.
    pub sn_v: Vec<f64>,
    pub b_hid: Vec<f64>,
    /// `rff_dim × hidden`, frozen at initialization.
    pub w_rff: Matrix,
    /// frozen at initialization
    pub b_rff: Vec<f64>,
    pub beta: Vec<f64>,
    /// `rff_dim × rff_dim`
    pub precision: Matrix,
    /// Set by [`sngp_covariance_finalize`].
    pub covariance: Option<Matrix>,
    pub finalized: bool,
    /// Cached by finalization for the variance path.
    pub(crate) cov_factor: Option<CovFactor>,
}

impl SngpParams {
    pub fn init(cfg: &HeadConfig, rng: &mut RngStream) -> Self {
        let (d, h, dd) = (cfg.input_dim, cfg.hidden, cfg.rff_dim);
        let a1 = 1.0 / (d as f64).sqrt();
        let w_hid = Matrix::from_fn(h, d, |_, _| rng.uniform_range(-a1, a1));
        let b_hid = (0..h).map(|_| rng.uniform_range(-a1, a1)).collect();
        let mut w_rff = Matrix::zeros(dd, h);
        rng.fill_normal(w_rff.as_mut_slice());
        let b_rff = (0..dd).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
        let a2 = 1.0 / (dd as f64).sqrt();
        let beta = (0..dd).map(|_| rng.uniform_range(-a2, a2)).collect();
        let mut p = SngpParams {
            w_hid,
            sn_u: vec![0.0; h],
            sn_v: vec![0.0; d],
            b_hid,
            w_rff,
            b_rff,
            beta,
            precision: Matrix::scaled_identity(dd, cfg.ridge),
            covariance: None,
            finalized: false,
            cov_factor: None,
        };
        spectral_normalize(&mut p, cfg, rng);
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_hid.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_hid.rows()
    }

    pub fn rff_dim(&self) -> usize {
        self.w_rff.rows()
    }

    /// Drops any covariance and restarts the precision at `ridge·I`.
    pub fn reset_precision(&mut self, ridge: f64) {
        self.precision = Matrix::scaled_identity(self.rff_dim(), ridge);
        self.covariance = None;
        self.finalized = false;
        self.cov_factor = None;
    }

    /// Hidden activations `relu(W_hid x + b_hid)`, `n × hidden`.
    pub fn hidden_features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} columns, SNGP head expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut z = gemm(1.0, x, Trans::No, &self.w_hid, Trans::Yes);
        z.add_row_vector(&self.b_hid);
        relu_inplace(&mut z);
        Ok(z)
    }

    /// Random features `φ` for every row of `x`, `n × rff_dim`.
    pub fn features(&self, x: &Matrix) -> Result<Matrix> {
        let h = self.hidden_features(x)?;
        let mut phi = gemm(1.0, &h, Trans::No, &self.w_rff, Trans::Yes);
        phi.add_row_vector(&self.b_rff);
        let amp = (2.0 / self.rff_dim() as f64).sqrt();
        phi.as_mut_slice().iter_mut().for_each(|v| *v = amp * v.cos());
        Ok(phi)
    }

    /// Returns `(φ, pre-activation W_rff h + b_rff)`.
    fn rff_batch(&self, h: &Matrix) -> (Matrix, Matrix) {
        let mut pre = gemm(1.0, h, Trans::No, &self.w_rff, Trans::Yes);
        pre.add_row_vector(&self.b_rff);
        let amp = (2.0 / self.rff_dim() as f64).sqrt();
        let mut phi = pre.clone();
        phi.as_mut_slice().iter_mut().for_each(|v| *v = amp * v.cos());
        (phi, pre)
    }
}

impl Tensors for SngpParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w_hid", self.w_hid.as_slice()),
            ("b_hid", &self.b_hid),
            ("beta", &self.beta),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w_hid", self.w_hid.as_mut_slice()),
            ("b_hid", &mut self.b_hid),
            ("beta", &mut self.beta),
        ]
    }
}

/// Gradient of the SNGP training loss; the frozen random-feature layer and the Laplace
/// state have none.
#[derive(Debug, Clone, PartialEq)]
pub struct SngpGrads {
    pub w_hid: Matrix,
    pub b_hid: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Tensors for SngpGrads {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w_hid", self.w_hid.as_slice()),
            ("b_hid", &self.b_hid),
            ("beta", &self.beta),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w_hid", self.w_hid.as_mut_slice()),
            ("b_hid", &mut self.b_hid),
            ("beta", &mut self.beta),
        ]
    }
}

/// Rescales `W_hid` so its estimated spectral norm does not exceed `cfg.spectral_bound`.
///
/// Warm-starts from the persisted `sn_u` with [`WARM_POWER_ITERS`] iterations, or draws a
/// cold start from `rng` with [`COLD_POWER_ITERS`] when no vector has been stored yet. A
/// matrix already inside the bound (or all zero) is left untouched.
pub fn spectral_normalize(p: &mut SngpParams, cfg: &HeadConfig, rng: &mut RngStream) {
    let warm = p.sn_u.iter().any(|&x| x != 0.0);
    let est = if warm {
        power_iteration_from(&p.w_hid, &p.sn_u, WARM_POWER_ITERS)
    } else {
        power_iteration(&p.w_hid, COLD_POWER_ITERS, rng)
    };
    if est.sigma > cfg.spectral_bound {
        p.w_hid.scale(cfg.spectral_bound / est.sigma);
    }
    p.sn_u = est.u;
    p.sn_v = est.v;
}

/// `φ_j = sqrt(2/D)·cos(W_rff_j·h + b_rff_j)` for one hidden vector.
pub fn rff_transform(h: &[f64], p: &SngpParams) -> Vec<f64> {
    assert_eq!(h.len(), p.hidden());
    let amp = (2.0 / p.rff_dim() as f64).sqrt();
    (0..p.rff_dim())
        .map(|j| amp * (dot(p.w_rff.row(j), h) + p.b_rff[j]).cos())
        .collect()
}

/// Logits and, when requested, predictive variances `φᵀΣφ` (clamped at 0 against round-off).
pub fn sngp_forward(
    p: &SngpParams,
    x: &Matrix,
    _cfg: &HeadConfig,
    with_variance: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let cov = match (&p.covariance, with_variance) {
        (_, false) => None,
        (Some(c), true) if p.finalized => Some(c),
        _ => {
            return Err(Error::State(
                "SNGP covariance requested before it was finalized".into(),
            ))
        }
    };
    let phi = p.features(x)?;
    let logits: Vec<f64> = (0..phi.rows()).map(|i| dot(phi.row(i), &p.beta)).collect();
    let variance = cov.map(|c| match &p.cov_factor {
        Some(l) => l.quadratic_forms(&phi),
        None => quadratic_forms(&phi, c),
    });
    Ok((logits, variance))
}

/// Lower Cholesky factor `L` of the covariance in single precision.
///
/// Variances are computed as `‖Lᵀφ‖²`, which needs half the multiply-adds of `φᵀΣφ`; running
/// that product in `f32` halves it again at a relative error around 1e-6. Logits stay in
/// `f64`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CovFactor {
    dim: usize,
    /// row-major, zeros above the diagonal
    lower: Vec<f32>,
}

impl CovFactor {
    pub(crate) fn new(cov: &Matrix) -> Result<Self> {
        let l = cov.cholesky()?;
        Ok(CovFactor {
            dim: l.rows(),
            lower: l.as_slice().iter().map(|&v| v as f32).collect(),
        })
    }

    fn quadratic_forms(&self, phi: &Matrix) -> Vec<f64> {
        const BLOCK: usize = 64;
        let (m, k) = phi.shape();
        assert_eq!(k, self.dim, "feature width does not match the covariance factor");
        let a: Vec<f32> = phi.as_slice().iter().map(|&v| v as f32).collect();
        let mut c = vec![0.0f32; m * k];
        let mut j0 = 0;
        while j0 < k {
            let j1 = (j0 + BLOCK).min(k);
            // columns j0..j1 of L vanish in rows < j0
            // SAFETY: `a` starts at column j0 and spans m rows by k - j0 columns; the factor
            // block starts at (j0, j0) and spans k - j0 rows by j1 - j0 columns; `c` starts
            // at column j0 and spans m by j1 - j0. All have row stride k and lie inside their
            // buffers.
            unsafe {
                matrixmultiply::sgemm(
                    m,
                    k - j0,
                    j1 - j0,
                    1.0,
                    a.as_ptr().add(j0),
                    k as isize,
                    1,
                    self.lower.as_ptr().add(j0 * k + j0),
                    k as isize,
                    1,
                    0.0,
                    c.as_mut_ptr().add(j0),
                    k as isize,
                    1,
                );
            }
            j0 = j1;
        }
        c.chunks(k.max(1))
            .take(m)
            .map(|row| row.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
            .collect()
    }
}

/// `φᵢᵀ C φᵢ` for each row of `phi`.
fn quadratic_forms(phi: &Matrix, c: &Matrix) -> Vec<f64> {
    let pc = gemm(1.0, phi, Trans::No, c, Trans::No);
    (0..phi.rows())
        .map(|i| dot(pc.row(i), phi.row(i)).max(0.0))
        .collect()
}

/// Adds `Σᵢ pᵢ(1−pᵢ) φᵢφᵢᵀ` to the precision matrix.
pub fn sngp_precision_update(p: &mut SngpParams, phi: &Matrix, probs: &[f64]) -> Result<()> {
    if phi.cols() != p.rff_dim() || phi.rows() != probs.len() {
        return Err(Error::Dimension(format!(
            "feature batch {}x{} with {} probabilities for rff_dim {}",
            phi.rows(),
            phi.cols(),
            probs.len(),
            p.rff_dim()
        )));
    }
    if let Some(bad) = probs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Domain(format!("probability {bad} outside [0, 1]")));
    }
    let mut weighted = phi.clone();
    for (i, &q) in probs.iter().enumerate() {
        let w = q * (1.0 - q);
        weighted.row_mut(i).iter_mut().for_each(|v| *v *= w);
    }
    let inc = gemm(1.0, &weighted, Trans::Yes, phi, Trans::No);
    let dd = p.rff_dim();
    for i in 0..dd {
        for j in 0..=i {
            let v = 0.5 * (inc.get(i, j) + inc.get(j, i));
            let updated = p.precision.get(i, j) + v;
            p.precision.set(i, j, updated);
            if i != j {
                p.precision.set(j, i, updated);
            }
        }
    }
    p.covariance = None;
    p.finalized = false;
    p.cov_factor = None;
    Ok(())
}

/// Largest tolerated `‖P·Σ − I‖_max` after inversion.
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-8;

/// Inverts the accumulated precision into the posterior covariance and marks the head final.
pub fn sngp_covariance_finalize(p: &mut SngpParams) -> Result<()> {
    let cov = p.precision.spd_inverse()?;
    let prod = p.precision.matmul(&cov);
    let resid = prod.max_abs_diff(&Matrix::identity(p.rff_dim()));
    if !(resid < INVERSE_RESIDUAL_TOL) {
        return Err(Error::Numerical(format!(
            "precision inverse residual {resid:e} exceeds {INVERSE_RESIDUAL_TOL:e}"
        )));
    }
    p.cov_factor = Some(CovFactor::new(&cov)?);
    p.covariance = Some(cov);
    p.finalized = true;
    Ok(())
}

/// `sigmoid(logit / sqrt(1 + λ·variance))`.
#[inline]
pub fn mean_field_adjust(logit: f64, variance: f64, lambda: f64) -> f64 {
    stable_sigmoid(logit / (1.0 + lambda * variance.max(0.0)).sqrt())
}

pub(crate) fn sngp_gradient(p: &SngpParams, x: &Matrix, labels: &[u8]) -> Result<(f64, SngpGrads)> {
    if x.cols() != p.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} columns, SNGP head expects {}",
            x.cols(),
            p.input_dim()
        )));
    }
    let mut z = gemm(1.0, x, Trans::No, &p.w_hid, Trans::Yes);
    z.add_row_vector(&p.b_hid);
    let mut h = z.clone();
    relu_inplace(&mut h);
    let (phi, pre) = p.rff_batch(&h);
    let logits: Vec<f64> = (0..phi.rows()).map(|i| dot(phi.row(i), &p.beta)).collect();
    let (loss, g) = bce_loss(&logits, labels)?;

    let n = x.rows();
    let dd = p.rff_dim();
    let amp = (2.0 / dd as f64).sqrt();
    let beta = phi.matvec_t(&g);
    // ∂/∂pre = g·β ⊙ (−amp·sin(pre))
    let mut dpre = pre;
    for i in 0..n {
        let gi = g[i];
        for (j, v) in dpre.row_mut(i).iter_mut().enumerate() {
            *v = -gi * p.beta[j] * amp * v.sin();
        }
    }
    let mut dz = gemm(1.0, &dpre, Trans::No, &p.w_rff, Trans::No);
    for (v, zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
        if *zv <= 0.0 {
            *v = 0.0;
        }
    }
    let w_hid = gemm(1.0, &dz, Trans::Yes, x, Trans::No);
    let b_hid = dz.column_sums();
    Ok((loss, SngpGrads { w_hid, b_hid, beta }))
}
