//! Losses, optimizer, schedules and the epoch loop.

mod config;
mod loss;
mod optim;
mod schedule;
mod trainer;

pub use config::{parse_config, TrainConfig};
pub use loss::{bce_loss, elbo_objective};
pub use optim::{adamw_step, decays, OptimizerState};
pub use schedule::{EarlyStopDecision, EarlyStopping, PlateauScheduler};
pub use trainer::{fit_laplace, train, StopReason, TrainHistory};
