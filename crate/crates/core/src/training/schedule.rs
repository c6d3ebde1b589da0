/// Reduce-on-plateau learning-rate schedule driven by validation loss.
///
/// An epoch improves when its loss is below `best − min_improvement`. After `patience + 1`
/// consecutive epochs without improvement the rate is multiplied by `factor` and the counter
/// restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_improvement: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, min_improvement: f64) -> Self {
        PlateauScheduler {
            lr,
            factor,
            patience,
            min_improvement,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    /// Records one epoch's validation loss and returns the learning rate for the next epoch.
    pub fn step(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best - self.min_improvement {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs > self.patience {
                self.lr *= self.factor;
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStopDecision {
    Continue,
    Stop,
}

/// Stops once `patience` consecutive epochs fail to improve on the best loss by more than
/// `min_improvement`.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_improvement: f64,
    best: f64,
    best_epoch: usize,
    epochs_seen: usize,
    failures: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_improvement: f64) -> Self {
        EarlyStopping {
            patience,
            min_improvement,
            best: f64::INFINITY,
            best_epoch: 0,
            epochs_seen: 0,
            failures: 0,
        }
    }

    pub fn step(&mut self, val_loss: f64) -> EarlyStopDecision {
        self.epochs_seen += 1;
        if val_loss < self.best - self.min_improvement {
            self.best = val_loss;
            self.best_epoch = self.epochs_seen;
            self.failures = 0;
        } else {
            self.failures += 1;
        }
        if self.failures >= self.patience {
            EarlyStopDecision::Stop
        } else {
            EarlyStopDecision::Continue
        }
    }

    /// 1-based epoch of the best loss so far (0 before any step).
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn failures(&self) -> usize {
        self.failures
    }
}
