//! Classification heads with uncertainty estimates for fixed-dimension text embeddings.
//!
//! Three heads share one training and evaluation pipeline:
//!
//! - [`heads::dnn`]: a dense one-hidden-layer network producing a single point prediction.
//! - [`heads::bnn`]: a Bayesian network with factorized Gaussian weights trained with the
//!   flipout estimator; prediction averages `K` sampled forwards.
//! - [`heads::sngp`]: a spectrally normalized hidden layer followed by a random-feature
//!   Gaussian process output layer with a Laplace posterior covariance.
//!
//! Everything runs in `f64` on the CPU and every source of randomness is a seeded
//! [`numerics::RngStream`], so a run is reproducible from a single seed.
//!
//! # Quick start
//!
//! ```no_run
//! use uq_heads::prelude::*;
//!
//! # fn main() -> uq_heads::Result<()> {
//! let dataset = synthetic::two_gaussians(16, 400, 3.0, 1);
//! let splits = split_dataset(dataset.n(), 1)?;
//! let head_cfg = HeadConfig { hidden: 32, rff_dim: 128, ..HeadConfig::new(16) };
//! let train_cfg = TrainConfig { learning_rate: 1e-2, max_epochs: 20, seed: 1, ..TrainConfig::default() };
//! let (model, history) = train(HeadKind::Sngp, &dataset, &splits, &head_cfg, &train_cfg)?;
//! println!("stopped after {} epochs ({:?})", history.epochs(), history.stop_reason);
//! # Ok(()) }
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
mod error;
pub mod eval;
pub mod heads;
pub mod numerics;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{split_dataset, EmbeddingDataset, SplitIndices};
    pub use crate::eval::{accuracy, f1_binary, variance_decile_report, EvalReport};
    pub use crate::heads::{
        predict_with_uncertainty, HeadConfig, HeadKind, HeadParams, Model, UncertainPrediction,
    };
    pub use crate::numerics::{Matrix, RngStream};
    pub use crate::synthetic;
    pub use crate::training::{train, TrainConfig, TrainHistory};
    pub use crate::{Error, Result};
}
