use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{adamw_step, bce_loss, EarlyStopDecision, EarlyStopping, OptimizerState, PlateauScheduler, TrainConfig};
use crate::data::{EmbeddingDataset, SplitIndices};
use crate::heads::{
    gradient, sngp_covariance_finalize, sngp_precision_update, HeadConfig, HeadKind, HeadParams, Model,
    SngpParams,
};
use crate::numerics::{stable_sigmoid, streams, Matrix, RngStream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

/// Per-epoch record of a training run. All vectors have one entry per completed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub head: HeadKind,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Rate used during the epoch.
    pub learning_rate: Vec<f64>,
    pub wall_seconds: Vec<f64>,
    pub stop_reason: StopReason,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.val_loss.len()
    }

    /// Equality ignoring wall-clock timings.
    pub fn same_trajectory(&self, other: &TrainHistory) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        self.head == other.head
            && bits(&self.train_loss) == bits(&other.train_loss)
            && bits(&self.val_loss) == bits(&other.val_loss)
            && bits(&self.learning_rate) == bits(&other.learning_rate)
            && self.stop_reason == other.stop_reason
            && self.best_epoch == other.best_epoch
    }
}

/// Trains one head on the `train` split, using the `val` split for scheduling, early stopping
/// and model selection.
///
/// Mini-batches come from a seeded shuffle of the training rows every epoch. After the loop
/// the best-validation parameters are restored; for the SNGP head the Laplace precision is
/// then rebuilt from `ridge·I` over one ordered pass of the training rows and inverted.
///
/// Randomness is split into substreams of `train_cfg.seed`: initialization, shuffling,
/// flipout noise, power iteration and the per-epoch BNN validation sample.
pub fn train(
    kind: HeadKind,
    dataset: &EmbeddingDataset,
    splits: &SplitIndices,
    head_cfg: &HeadConfig,
    train_cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    head_cfg.validate()?;
    train_cfg.validate()?;
    if head_cfg.input_dim != dataset.dim() {
        return Err(Error::Dimension(format!(
            "head expects {} features, dataset has {}",
            head_cfg.input_dim,
            dataset.dim()
        )));
    }
    dataset.check_finite()?;
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::Argument("training needs a labeled dataset".into()))?;
    splits.validate(dataset.n())?;
    if splits.train.is_empty() || splits.val.is_empty() {
        return Err(Error::Argument("train and validation splits must be non-empty".into()));
    }

    let x_train = dataset.embeddings().select_rows(&splits.train);
    let y_train: Vec<u8> = splits.train.iter().map(|&i| labels[i]).collect();
    let x_val = dataset.embeddings().select_rows(&splits.val);
    let y_val: Vec<u8> = splits.val.iter().map(|&i| labels[i]).collect();
    let n_train = x_train.rows();

    let root = RngStream::new(train_cfg.seed);
    let mut init_rng = root.substream(streams::INIT);
    let mut shuffle_rng = root.substream(streams::SHUFFLE);
    let mut flipout_rng = root.substream(streams::FLIPOUT);
    let mut power_rng = root.substream(streams::POWER_ITERATION);
    let val_root = root.substream(streams::VALIDATION);

    let mut params = HeadParams::init(kind, head_cfg, &mut init_rng)?;
    let mut opt = OptimizerState::new(params.as_tensors());
    let mut scheduler = PlateauScheduler::new(
        train_cfg.learning_rate,
        train_cfg.scheduler_factor,
        train_cfg.scheduler_patience,
        train_cfg.min_improvement,
    );
    let mut stopper = EarlyStopping::new(train_cfg.early_stop_patience, train_cfg.min_improvement);

    let mut history = TrainHistory {
        head: kind,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        learning_rate: Vec::new(),
        wall_seconds: Vec::new(),
        stop_reason: StopReason::MaxEpochs,
        best_epoch: 0,
    };
    let mut best: Option<(f64, HeadParams)> = None;
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut lr = train_cfg.learning_rate;

    for epoch in 1..=train_cfg.max_epochs {
        let started = Instant::now();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (batch_no, chunk) in order.chunks(train_cfg.batch_size).enumerate() {
            let xb = x_train.select_rows(chunk);
            let yb: Vec<u8> = chunk.iter().map(|&i| y_train[i]).collect();
            let (loss, grads) = gradient(&params, head_cfg, &xb, &yb, &mut flipout_rng, n_train)?;
            if !loss.is_finite() || !grads.norm().is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_no + 1,
                    loss,
                });
            }
            adamw_step(&mut opt, params.as_tensors_mut(), grads.as_tensors(), lr, train_cfg.weight_decay)?;
            params.project(head_cfg, &mut power_rng);
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / n_train as f64;

        let mut val_rng = val_root.substream(epoch as u64);
        let val_logits = params.logits(head_cfg, &x_val, &mut val_rng)?;
        let (val_loss, _) = bce_loss(&val_logits, &y_val)?;
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: 0,
                loss: val_loss,
            });
        }

        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        history.learning_rate.push(lr);
        history.wall_seconds.push(started.elapsed().as_secs_f64());

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, params.clone()));
            history.best_epoch = epoch;
        }
        lr = scheduler.step(val_loss);
        if stopper.step(val_loss) == EarlyStopDecision::Stop {
            history.stop_reason = StopReason::EarlyStop;
            break;
        }
    }

    let mut params = best.map(|(_, p)| p).expect("at least one epoch ran");
    if let HeadParams::Sngp(p) = &mut params {
        fit_laplace(p, head_cfg, &x_train, train_cfg.batch_size)?;
    }
    Ok((
        Model {
            config: head_cfg.clone(),
            params,
            train_seed: train_cfg.seed,
        },
        history,
    ))
}

/// Rebuilds the SNGP precision from `ridge·I` with one ordered pass over `x` (current
/// probabilities, no mean-field adjustment) and finalizes the covariance.
pub fn fit_laplace(p: &mut SngpParams, cfg: &HeadConfig, x: &Matrix, batch_size: usize) -> Result<()> {
    p.reset_precision(cfg.ridge);
    let idx: Vec<usize> = (0..x.rows()).collect();
    for chunk in idx.chunks(batch_size.max(1)) {
        let phi = p.features(&x.select_rows(chunk))?;
        let probs: Vec<f64> = (0..phi.rows())
            .map(|i| stable_sigmoid(crate::numerics::dot(phi.row(i), &p.beta)))
            .collect();
        sngp_precision_update(p, &phi, &probs)?;
    }
    sngp_covariance_finalize(p)
}
