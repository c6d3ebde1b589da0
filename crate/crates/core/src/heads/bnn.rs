//! Bayesian head with factorized Gaussian weights, trained and sampled with flipout.
//!
//! Every weight and bias `w` carries a variational posterior `N(μ, σ²)` with
//! `σ = softplus(ρ)`. A forward call draws one shared perturbation `ΔW = σ ⊙ ε` per layer and
//! decorrelates the examples of the batch with per-example Rademacher signs `s`, `r`:
//!
//! ```text
//! out_i = μ·x_i + ((x_i ⊙ s_i)·ΔWᵀ) ⊙ r_i + (μ_b + σ_b ⊙ ε_b)
//! ```

use super::{relu_inplace, HeadConfig, Tensors};
use crate::numerics::{dot, gemm, inv_softplus, softplus, stable_sigmoid, Matrix, RngStream, Trans};
use crate::training::bce_loss;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BnnParams {
    /// `hidden × d`
    pub w1_mu: Matrix,
    pub w1_rho: Matrix,
    pub b1_mu: Vec<f64>,
    pub b1_rho: Vec<f64>,
    pub w2_mu: Vec<f64>,
    pub w2_rho: Vec<f64>,
    pub b2_mu: f64,
    pub b2_rho: f64,
}

impl BnnParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        BnnParams {
            w1_mu: Matrix::zeros(hidden, input_dim),
            w1_rho: Matrix::zeros(hidden, input_dim),
            b1_mu: vec![0.0; hidden],
            b1_rho: vec![0.0; hidden],
            w2_mu: vec![0.0; hidden],
            w2_rho: vec![0.0; hidden],
            b2_mu: 0.0,
            b2_rho: 0.0,
        }
    }

    /// Posterior initialized at the prior: `μ = 0`, `σ = prior_std` for every parameter.
    pub fn init(cfg: &HeadConfig) -> Result<Self> {
        let mut p = BnnParams::zeros(cfg.input_dim, cfg.hidden);
        p.fill_rho(inv_softplus(cfg.prior_std)?);
        Ok(p)
    }

    pub fn fill_rho(&mut self, rho: f64) {
        for (name, t) in self.tensors_mut() {
            if name.ends_with(".rho") {
                t.iter_mut().for_each(|x| *x = rho);
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1_mu.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w1_mu.rows()
    }

    /// Posterior means as a dense head.
    pub fn mean_dnn(&self) -> super::DnnParams {
        super::DnnParams {
            w1: self.w1_mu.clone(),
            b1: self.b1_mu.clone(),
            w2: self.w2_mu.clone(),
            b2: self.b2_mu,
        }
    }
}

impl Tensors for BnnParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w1.mu", self.w1_mu.as_slice()),
            ("w1.rho", self.w1_rho.as_slice()),
            ("b1.mu", &self.b1_mu),
            ("b1.rho", &self.b1_rho),
            ("w2.mu", &self.w2_mu),
            ("w2.rho", &self.w2_rho),
            ("b2.mu", std::slice::from_ref(&self.b2_mu)),
            ("b2.rho", std::slice::from_ref(&self.b2_rho)),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w1.mu", self.w1_mu.as_mut_slice()),
            ("w1.rho", self.w1_rho.as_mut_slice()),
            ("b1.mu", &mut self.b1_mu),
            ("b1.rho", &mut self.b1_rho),
            ("w2.mu", &mut self.w2_mu),
            ("w2.rho", &mut self.w2_rho),
            ("b2.mu", std::slice::from_mut(&mut self.b2_mu)),
            ("b2.rho", std::slice::from_mut(&mut self.b2_rho)),
        ]
    }
}

/// All random draws of one flipout forward call over an `n`-row batch.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipoutNoise {
    /// `hidden × d` standard normal, shared by the batch.
    pub eps_w1: Matrix,
    pub eps_b1: Vec<f64>,
    pub eps_w2: Vec<f64>,
    pub eps_b2: f64,
    /// `n × d` input signs of layer 1.
    pub s1: Matrix,
    /// `n × hidden` output signs of layer 1.
    pub r1: Matrix,
    /// `n × hidden` input signs of layer 2.
    pub s2: Matrix,
    /// output signs of layer 2.
    pub r2: Vec<f64>,
}

impl FlipoutNoise {
    pub fn sample(input_dim: usize, hidden: usize, n: usize, rng: &mut RngStream) -> Self {
        let mut eps_w1 = Matrix::zeros(hidden, input_dim);
        rng.fill_normal(eps_w1.as_mut_slice());
        let eps_b1 = rng.normal_vec(hidden);
        let eps_w2 = rng.normal_vec(hidden);
        let eps_b2 = rng.normal();
        let mut s1 = Matrix::zeros(n, input_dim);
        rng.fill_rademacher(s1.as_mut_slice());
        let mut r1 = Matrix::zeros(n, hidden);
        rng.fill_rademacher(r1.as_mut_slice());
        let mut s2 = Matrix::zeros(n, hidden);
        rng.fill_rademacher(s2.as_mut_slice());
        let mut r2 = vec![0.0; n];
        rng.fill_rademacher(&mut r2);
        FlipoutNoise {
            eps_w1,
            eps_b1,
            eps_w2,
            eps_b2,
            s1,
            r1,
            s2,
            r2,
        }
    }
}

struct Cache {
    /// `σ ⊙ ε` of each layer
    dw1: Matrix,
    dw2: Vec<f64>,
    /// `x ⊙ s1`
    xs: Matrix,
    z1: Matrix,
    a1: Matrix,
    logits: Vec<f64>,
}

fn forward_cached(p: &BnnParams, x: &Matrix, noise: &FlipoutNoise) -> Result<Cache> {
    if x.cols() != p.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} columns, Bayesian head expects {}",
            x.cols(),
            p.input_dim()
        )));
    }
    let (n, h) = (x.rows(), p.hidden());

    let mut dw1 = p.w1_rho.clone();
    for (w, e) in dw1.as_mut_slice().iter_mut().zip(noise.eps_w1.as_slice()) {
        *w = softplus(*w) * e;
    }
    let b1: Vec<f64> = (0..h)
        .map(|j| p.b1_mu[j] + softplus(p.b1_rho[j]) * noise.eps_b1[j])
        .collect();

    let mut xs = x.clone();
    for (v, s) in xs.as_mut_slice().iter_mut().zip(noise.s1.as_slice()) {
        *v *= s;
    }
    let mut z1 = gemm(1.0, x, Trans::No, &p.w1_mu, Trans::Yes);
    let pert = gemm(1.0, &xs, Trans::No, &dw1, Trans::Yes);
    for ((z, q), r) in z1
        .as_mut_slice()
        .iter_mut()
        .zip(pert.as_slice())
        .zip(noise.r1.as_slice())
    {
        *z += q * r;
    }
    z1.add_row_vector(&b1);
    let mut a1 = z1.clone();
    relu_inplace(&mut a1);

    let dw2: Vec<f64> = (0..h)
        .map(|j| softplus(p.w2_rho[j]) * noise.eps_w2[j])
        .collect();
    let b2 = p.b2_mu + softplus(p.b2_rho) * noise.eps_b2;
    let logits = (0..n)
        .map(|i| {
            let a = a1.row(i);
            let s = noise.s2.row(i);
            let flip: f64 = (0..h).map(|j| a[j] * s[j] * dw2[j]).sum();
            dot(a, &p.w2_mu) + flip * noise.r2[i] + b2
        })
        .collect();
    Ok(Cache {
        dw1,
        dw2,
        xs,
        z1,
        a1,
        logits,
    })
}

/// Logits of one flipout sample over the batch `x`, with noise drawn from `rng`.
pub fn flipout_forward(p: &BnnParams, x: &Matrix, rng: &mut RngStream) -> Result<Vec<f64>> {
    let noise = FlipoutNoise::sample(p.input_dim(), p.hidden(), x.rows(), rng);
    flipout_forward_with(p, x, &noise)
}

/// Logits for explicitly supplied noise.
pub fn flipout_forward_with(p: &BnnParams, x: &Matrix, noise: &FlipoutNoise) -> Result<Vec<f64>> {
    forward_cached(p, x, noise).map(|c| c.logits)
}

/// `KL(N(μ, σ²) ‖ N(0, prior_std²))` summed over every weight and bias.
pub fn kl_total(p: &BnnParams, prior_std: f64) -> f64 {
    let tensors = p.tensors();
    let var_p = prior_std * prior_std;
    let mut total = 0.0;
    for pair in tensors.chunks(2) {
        let (_, mu) = pair[0];
        let (_, rho) = pair[1];
        for (&m, &r) in mu.iter().zip(rho) {
            let s = softplus(r);
            total += (prior_std / s).ln() + (s * s + m * m) / (2.0 * var_p) - 0.5;
        }
    }
    total
}

pub(crate) fn bnn_gradient(
    p: &BnnParams,
    cfg: &HeadConfig,
    x: &Matrix,
    labels: &[u8],
    rng: &mut RngStream,
    n_train: usize,
) -> Result<(f64, BnnParams)> {
    let noise = FlipoutNoise::sample(p.input_dim(), p.hidden(), x.rows(), rng);
    bnn_gradient_with(p, cfg.prior_std, x, labels, &noise, n_train)
}

/// Objective `mean BCE + kl_total / n_train` and its gradient for fixed noise.
pub fn bnn_gradient_with(
    p: &BnnParams,
    prior_std: f64,
    x: &Matrix,
    labels: &[u8],
    noise: &FlipoutNoise,
    n_train: usize,
) -> Result<(f64, BnnParams)> {
    let cache = forward_cached(p, x, noise)?;
    let (bce, g) = bce_loss(&cache.logits, labels)?;
    let kl = kl_total(p, prior_std);
    let loss = crate::training::elbo_objective(bce, kl, n_train)?;
    let (n, h) = (x.rows(), p.hidden());
    let mut grad = BnnParams::zeros(p.input_dim(), h);

    // output layer
    let mut d_dw2 = vec![0.0; h];
    let mut dz1 = Matrix::zeros(n, h);
    for i in 0..n {
        let gi = g[i];
        let a = cache.a1.row(i);
        let s = noise.s2.row(i);
        let r = noise.r2[i];
        let z = cache.z1.row(i);
        let dz = dz1.row_mut(i);
        for j in 0..h {
            grad.w2_mu[j] += gi * a[j];
            d_dw2[j] += gi * r * a[j] * s[j];
            let da = gi * (p.w2_mu[j] + r * s[j] * cache.dw2[j]);
            dz[j] = if z[j] > 0.0 { da } else { 0.0 };
        }
    }
    let gsum: f64 = g.iter().sum();
    grad.b2_mu = gsum;
    grad.b2_rho = gsum * noise.eps_b2 * stable_sigmoid(p.b2_rho);
    for j in 0..h {
        grad.w2_rho[j] = d_dw2[j] * noise.eps_w2[j] * stable_sigmoid(p.w2_rho[j]);
    }

    // hidden layer
    grad.w1_mu = gemm(1.0, &dz1, Trans::Yes, x, Trans::No);
    let db1 = dz1.column_sums();
    for j in 0..h {
        grad.b1_mu[j] = db1[j];
        grad.b1_rho[j] = db1[j] * noise.eps_b1[j] * stable_sigmoid(p.b1_rho[j]);
    }
    let mut dzr = dz1;
    for (v, r) in dzr.as_mut_slice().iter_mut().zip(noise.r1.as_slice()) {
        *v *= r;
    }
    let d_dw1 = gemm(1.0, &dzr, Trans::Yes, &cache.xs, Trans::No);
    for (k, gr) in grad.w1_rho.as_mut_slice().iter_mut().enumerate() {
        let rho = p.w1_rho.as_slice()[k];
        *gr = d_dw1.as_slice()[k] * noise.eps_w1.as_slice()[k] * stable_sigmoid(rho);
    }
    debug_assert_eq!(cache.dw1.shape(), grad.w1_rho.shape());

    // KL(N(μ,σ²) ‖ N(0,p²)): ∂/∂μ = μ/p², ∂/∂σ = σ/p² − 1/σ
    let scale = 1.0 / n_train as f64;
    let var_p = prior_std * prior_std;
    let src = p.tensors();
    let mut dst = grad.tensors_mut();
    for (pair_src, pair_dst) in src.chunks(2).zip(dst.chunks_mut(2)) {
        let (mu, rho) = (pair_src[0].1, pair_src[1].1);
        let (head, tail) = pair_dst.split_at_mut(1);
        let (gmu, grho) = (&mut *head[0].1, &mut *tail[0].1);
        for k in 0..mu.len() {
            let s = softplus(rho[k]);
            gmu[k] += scale * mu[k] / var_p;
            grho[k] += scale * (s / var_p - 1.0 / s) * stable_sigmoid(rho[k]);
        }
    }
    Ok((loss, grad))
}
