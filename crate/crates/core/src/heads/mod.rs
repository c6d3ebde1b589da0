//! The three classification heads and uncertainty-aware prediction.
//!
//! All heads map an `n × d` embedding batch to `n` binary logits through one hidden ReLU
//! layer of width [`HeadConfig::hidden`]. They differ in how the output layer produces
//! uncertainty:
//!
//! | head | parameters | prediction |
//! |------|------------|------------|
//! | DNN  | point weights | `sigmoid(logit)`, variance 0 |
//! | BNN  | Gaussian `(μ, ρ)` per weight, `σ = softplus(ρ)` | mean/variance of `K` sampled sigmoids |
//! | SNGP | spectrally normalized hidden layer, random Fourier features, Laplace covariance | mean-field adjusted sigmoid, `φᵀΣφ` |

pub mod bnn;
pub mod dnn;
mod io;
pub mod sngp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerics::{stable_sigmoid, Matrix, RngStream};
use crate::{Error, Result};

pub use bnn::{flipout_forward, kl_total, BnnParams, FlipoutNoise};
pub use dnn::{dnn_forward, DnnParams};
pub use io::{read_model, write_model, MODEL_MAGIC};
pub use sngp::{
    mean_field_adjust, rff_transform, sngp_covariance_finalize, sngp_forward,
    sngp_precision_update, spectral_normalize, SngpGrads, SngpParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Dnn,
    Bnn,
    Sngp,
}

impl HeadKind {
    pub const ALL: [HeadKind; 3] = [HeadKind::Dnn, HeadKind::Bnn, HeadKind::Sngp];

    pub fn to_byte(self) -> u8 {
        match self {
            HeadKind::Dnn => 0,
            HeadKind::Bnn => 1,
            HeadKind::Sngp => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(HeadKind::Dnn),
            1 => Some(HeadKind::Bnn),
            2 => Some(HeadKind::Sngp),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Dnn => "dnn",
            HeadKind::Bnn => "bnn",
            HeadKind::Sngp => "sngp",
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dnn" => Ok(HeadKind::Dnn),
            "bnn" => Ok(HeadKind::Bnn),
            "sngp" => Ok(HeadKind::Sngp),
            other => Err(Error::Argument(format!(
                "unknown head '{other}' (expected dnn, bnn or sngp)"
            ))),
        }
    }
}

/// Shape and hyperparameters shared by all heads.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadConfig {
    /// Embedding dimension `d`.
    pub input_dim: usize,
    /// Hidden layer width.
    pub hidden: usize,
    /// Number of random Fourier features of the SNGP output layer.
    pub rff_dim: usize,
    /// Upper bound on the spectral norm of the SNGP hidden weight matrix.
    pub spectral_bound: f64,
    /// Ridge `s` of the SNGP prior precision `s·I`.
    pub ridge: f64,
    /// Mean-field factor `λ` in `sigmoid(logit / sqrt(1 + λ·var))`.
    pub mean_field_lambda: f64,
    /// Sampled forwards per BNN prediction.
    pub k_samples: usize,
    /// Standard deviation of the BNN weight prior `N(0, prior_std²)`.
    pub prior_std: f64,
}

impl HeadConfig {
    /// Defaults for an embedding of width `input_dim`.
    pub fn new(input_dim: usize) -> Self {
        HeadConfig {
            input_dim,
            hidden: 1024,
            rff_dim: 1024,
            spectral_bound: 0.95,
            ridge: 1.0,
            mean_field_lambda: std::f64::consts::PI / 8.0,
            k_samples: 10,
            prior_std: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid head config: {what}")));
        if self.input_dim == 0 {
            return bad("input_dim must be >= 1");
        }
        if self.hidden == 0 {
            return bad("hidden must be >= 1");
        }
        if self.rff_dim == 0 {
            return bad("rff_dim must be >= 1");
        }
        if !(self.spectral_bound > 0.0 && self.spectral_bound.is_finite()) {
            return bad("spectral_bound must be > 0");
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return bad("ridge must be > 0");
        }
        if !(self.mean_field_lambda >= 0.0 && self.mean_field_lambda.is_finite()) {
            return bad("mean_field_lambda must be >= 0");
        }
        if self.k_samples == 0 {
            return bad("k_samples must be >= 1");
        }
        if !(self.prior_std > 0.0 && self.prior_std.is_finite()) {
            return bad("prior_std must be > 0");
        }
        Ok(())
    }

    pub(crate) fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::Dimension(format!(
                "input has {} columns, head expects {}",
                x.cols(),
                self.input_dim
            )));
        }
        Ok(())
    }
}

/// One prediction with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainPrediction {
    pub prob_mean: f64,
    pub variance: f64,
    pub label: u8,
}

impl UncertainPrediction {
    pub fn new(prob_mean: f64, variance: f64) -> Self {
        UncertainPrediction {
            prob_mean,
            variance,
            label: hard_label(prob_mean),
        }
    }
}

/// 0.5 threshold, ties to the positive class.
#[inline]
pub fn hard_label(prob: f64) -> u8 {
    u8::from(prob >= 0.5)
}

/// Named views over a set of trainable tensors, in a fixed order.
///
/// Parameter sets and their gradients implement this with identical names and shapes, which
/// is what the optimizer relies on.
pub trait Tensors {
    fn tensors(&self) -> Vec<(&'static str, &[f64])>;
    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;

    fn num_values(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// Trainable parameters of one head.
#[derive(Debug, Clone, PartialEq)]
pub enum HeadParams {
    Dnn(DnnParams),
    Bnn(BnnParams),
    Sngp(SngpParams),
}

impl HeadParams {
    /// Fresh parameters. SNGP weights are spectrally normalized before returning.
    pub fn init(kind: HeadKind, cfg: &HeadConfig, rng: &mut RngStream) -> Result<Self> {
        cfg.validate()?;
        Ok(match kind {
            HeadKind::Dnn => HeadParams::Dnn(DnnParams::init(cfg, rng)),
            HeadKind::Bnn => HeadParams::Bnn(BnnParams::init(cfg)?),
            HeadKind::Sngp => HeadParams::Sngp(SngpParams::init(cfg, rng)),
        })
    }

    pub fn kind(&self) -> HeadKind {
        match self {
            HeadParams::Dnn(_) => HeadKind::Dnn,
            HeadParams::Bnn(_) => HeadKind::Bnn,
            HeadParams::Sngp(_) => HeadKind::Sngp,
        }
    }

    /// One forward pass to logits. Stochastic for the BNN (one flipout sample), deterministic
    /// otherwise.
    pub fn logits(&self, cfg: &HeadConfig, x: &Matrix, rng: &mut RngStream) -> Result<Vec<f64>> {
        match self {
            HeadParams::Dnn(p) => dnn_forward(p, x),
            HeadParams::Bnn(p) => flipout_forward(p, x, rng),
            HeadParams::Sngp(p) => sngp_forward(p, x, cfg, false).map(|(l, _)| l),
        }
    }

    /// Training objective on a batch: mean BCE, plus `kl_total / n_train` for the BNN.
    pub fn objective(
        &self,
        cfg: &HeadConfig,
        x: &Matrix,
        labels: &[u8],
        rng: &mut RngStream,
        n_train: usize,
    ) -> Result<f64> {
        let logits = self.logits(cfg, x, rng)?;
        let (bce, _) = crate::training::bce_loss(&logits, labels)?;
        match self {
            HeadParams::Bnn(p) => crate::training::elbo_objective(bce, kl_total(p, cfg.prior_std), n_train),
            _ => Ok(bce),
        }
    }

    /// Post-step projection; spectral normalization for SNGP, no-op otherwise.
    pub fn project(&mut self, cfg: &HeadConfig, rng: &mut RngStream) {
        if let HeadParams::Sngp(p) = self {
            spectral_normalize(p, cfg, rng);
        }
    }

    pub fn as_tensors(&self) -> &dyn Tensors {
        match self {
            HeadParams::Dnn(p) => p,
            HeadParams::Bnn(p) => p,
            HeadParams::Sngp(p) => p,
        }
    }

    pub fn as_tensors_mut(&mut self) -> &mut dyn Tensors {
        match self {
            HeadParams::Dnn(p) => p,
            HeadParams::Bnn(p) => p,
            HeadParams::Sngp(p) => p,
        }
    }

    pub fn trainable_count(&self) -> usize {
        self.as_tensors().num_values()
    }
}

/// Gradient of a head's objective, shaped like its trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub enum Grads {
    Dnn(DnnParams),
    Bnn(BnnParams),
    Sngp(SngpGrads),
}

impl Grads {
    pub fn as_tensors(&self) -> &dyn Tensors {
        match self {
            Grads::Dnn(g) => g,
            Grads::Bnn(g) => g,
            Grads::Sngp(g) => g,
        }
    }

    pub fn norm(&self) -> f64 {
        self.as_tensors()
            .tensors()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Loss and analytic gradient of the head's training objective on one batch.
///
/// DNN and SNGP minimize mean BCE. The BNN minimizes the mean BCE of one flipout sample plus
/// `kl_total / n_train`; its noise is drawn from `rng` exactly as [`flipout_forward`] would,
/// so cloning the stream beforehand reproduces the same sample.
pub fn gradient(
    params: &HeadParams,
    cfg: &HeadConfig,
    x: &Matrix,
    labels: &[u8],
    rng: &mut RngStream,
    n_train: usize,
) -> Result<(f64, Grads)> {
    cfg.check_input(x)?;
    if labels.len() != x.rows() {
        return Err(Error::Dimension(format!(
            "{} rows vs {} labels",
            x.rows(),
            labels.len()
        )));
    }
    if n_train == 0 {
        return Err(Error::Argument("n_train must be at least 1".into()));
    }
    match params {
        HeadParams::Dnn(p) => dnn::dnn_gradient(p, x, labels).map(|(l, g)| (l, Grads::Dnn(g))),
        HeadParams::Bnn(p) => {
            bnn::bnn_gradient(p, cfg, x, labels, rng, n_train).map(|(l, g)| (l, Grads::Bnn(g)))
        }
        HeadParams::Sngp(p) => sngp::sngp_gradient(p, x, labels).map(|(l, g)| (l, Grads::Sngp(g))),
    }
}

/// Per-row probability, predictive variance and hard label.
///
/// - DNN: `sigmoid(logit)` with variance exactly 0.
/// - BNN: `K = cfg.k_samples` flipout forwards; sample mean and population variance of the
///   `K` sigmoid outputs.
/// - SNGP: mean-field adjusted probability with variance `φᵀΣφ`; requires a finalized
///   covariance.
pub fn predict_with_uncertainty(
    params: &HeadParams,
    cfg: &HeadConfig,
    x: &Matrix,
    rng: &mut RngStream,
) -> Result<Vec<UncertainPrediction>> {
    cfg.check_input(x)?;
    match params {
        HeadParams::Dnn(p) => Ok(dnn_forward(p, x)?
            .into_iter()
            .map(|z| UncertainPrediction::new(stable_sigmoid(z), 0.0))
            .collect()),
        HeadParams::Bnn(p) => {
            let n = x.rows();
            let k = cfg.k_samples;
            let mut samples = vec![Vec::with_capacity(k); n];
            for _ in 0..k {
                for (row, z) in samples.iter_mut().zip(flipout_forward(p, x, rng)?) {
                    row.push(stable_sigmoid(z));
                }
            }
            Ok(samples
                .iter()
                .map(|s| {
                    let mean = s.iter().sum::<f64>() / k as f64;
                    let var = s.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / k as f64;
                    UncertainPrediction::new(mean, var)
                })
                .collect())
        }
        HeadParams::Sngp(p) => {
            let (logits, var) = sngp_forward(p, x, cfg, true)?;
            let var = var.expect("variance requested");
            Ok(logits
                .into_iter()
                .zip(var)
                .map(|(z, v)| {
                    UncertainPrediction::new(mean_field_adjust(z, v, cfg.mean_field_lambda), v)
                })
                .collect())
        }
    }
}

/// A trained head with everything needed to predict and to persist it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: HeadConfig,
    pub params: HeadParams,
    /// Seed of the run that produced the model; evaluation recomputes the data split from it.
    pub train_seed: u64,
}

impl Model {
    pub fn kind(&self) -> HeadKind {
        self.params.kind()
    }

    pub fn predict(&self, x: &Matrix, rng: &mut RngStream) -> Result<Vec<UncertainPrediction>> {
        predict_with_uncertainty(&self.params, &self.config, x, rng)
    }
}

pub(crate) fn relu_inplace(m: &mut Matrix) {
    m.as_mut_slice().iter_mut().for_each(|x| {
        if *x < 0.0 {
            *x = 0.0
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_kind_round_trips() {
        for k in HeadKind::ALL {
            assert_eq!(HeadKind::from_byte(k.to_byte()), Some(k));
            assert_eq!(k.name().parse::<HeadKind>().unwrap(), k);
        }
        assert!(HeadKind::from_byte(3).is_none());
        assert!("mlp".parse::<HeadKind>().is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = HeadConfig::new(768);
        assert_eq!(cfg.hidden, 1024);
        assert_eq!(cfg.rff_dim, 1024);
        assert_eq!(cfg.k_samples, 10);
        assert_eq!(cfg.spectral_bound, 0.95);
        assert!((cfg.mean_field_lambda - std::f64::consts::FRAC_PI_8).abs() < 1e-16);
        cfg.validate().unwrap();
        for broken in [
            HeadConfig { hidden: 0, ..cfg.clone() },
            HeadConfig { rff_dim: 0, ..cfg.clone() },
            HeadConfig { spectral_bound: 0.0, ..cfg.clone() },
            HeadConfig { ridge: -1.0, ..cfg.clone() },
            HeadConfig { k_samples: 0, ..cfg.clone() },
        ] {
            assert!(broken.validate().is_err());
        }
    }

    #[test]
    fn hard_label_ties_go_positive() {
        assert_eq!(hard_label(0.5), 1);
        assert_eq!(hard_label(0.4999999), 0);
        assert_eq!(UncertainPrediction::new(0.9, 0.1).label, 1);
    }

    #[test]
    fn dnn_prediction_has_zero_variance() {
        let cfg = HeadConfig { hidden: 8, ..HeadConfig::new(3) };
        let mut rng = RngStream::new(1);
        let params = HeadParams::init(HeadKind::Dnn, &cfg, &mut rng).unwrap();
        let x = Matrix::from_fn(6, 3, |i, j| (i as f64 - j as f64) * 0.7);
        let preds = predict_with_uncertainty(&params, &cfg, &x, &mut rng).unwrap();
        assert!(preds.iter().all(|p| p.variance == 0.0));
    }

    #[test]
    fn bnn_near_deterministic_has_tiny_variance() {
        let cfg = HeadConfig { hidden: 8, ..HeadConfig::new(3) };
        let mut rng = RngStream::new(2);
        let mut p = BnnParams::init(&cfg).unwrap();
        p.w1_mu = Matrix::from_fn(8, 3, |i, j| ((i * 3 + j) as f64).sin());
        p.w2_mu = (0..8).map(|i| (i as f64).cos()).collect();
        p.fill_rho(-40.0);
        let x = Matrix::from_fn(4, 3, |i, j| (i + j) as f64 * 0.3);
        let preds = predict_with_uncertainty(&HeadParams::Bnn(p), &cfg, &x, &mut rng).unwrap();
        assert!(preds.iter().all(|p| p.variance < 1e-12));
    }

    #[test]
    fn unfinalized_sngp_is_a_state_error() {
        let cfg = HeadConfig { hidden: 4, rff_dim: 4, ..HeadConfig::new(3) };
        let mut rng = RngStream::new(3);
        let params = HeadParams::init(HeadKind::Sngp, &cfg, &mut rng).unwrap();
        let x = Matrix::zeros(2, 3);
        assert!(matches!(
            predict_with_uncertainty(&params, &cfg, &x, &mut rng),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let cfg = HeadConfig { hidden: 4, ..HeadConfig::new(3) };
        let mut rng = RngStream::new(3);
        let params = HeadParams::init(HeadKind::Dnn, &cfg, &mut rng).unwrap();
        let x = Matrix::zeros(2, 5);
        assert!(matches!(
            predict_with_uncertainty(&params, &cfg, &x, &mut rng),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            gradient(&params, &cfg, &x, &[0, 1], &mut rng, 10),
            Err(Error::Dimension(_))
        ));
    }
}
