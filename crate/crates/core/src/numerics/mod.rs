//! Dense linear algebra, seeded random streams and stable scalar functions.

mod matrix;
mod power;
mod rng;
mod scalar;

pub use matrix::{axpy, dot, norm2, Matrix};
pub(crate) use matrix::{gemm, Trans};
pub use power::{power_iteration, power_iteration_from, SpectralEstimate};
pub use rng::{rademacher, streams, RngStream};
pub use scalar::{inv_softplus, softplus, stable_sigmoid};
