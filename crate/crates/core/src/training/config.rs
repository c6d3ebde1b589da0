use crate::heads::HeadConfig;
use crate::{Error, Result};

/// Optimization hyperparameters. Defaults follow the fine-tuning protocol the heads were
/// designed for; desk-scale runs usually raise `learning_rate` and lower `max_epochs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub scheduler_factor: f64,
    /// Non-improving epochs tolerated before the rate drops on the next one.
    pub scheduler_patience: usize,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
    pub min_improvement: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-5,
            scheduler_factor: 0.1,
            scheduler_patience: 1,
            weight_decay: 0.01,
            max_epochs: 500,
            batch_size: 16,
            early_stop_patience: 5,
            seed: 0,
            min_improvement: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid train config: {what}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(self.scheduler_factor > 0.0 && self.scheduler_factor < 1.0) {
            return bad("scheduler_factor must lie in (0, 1)");
        }
        if self.scheduler_patience == 0 {
            return bad("scheduler_patience must be >= 1");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be >= 0");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be >= 1");
        }
        if !(self.min_improvement >= 0.0 && self.min_improvement.is_finite()) {
            return bad("min_improvement must be >= 0");
        }
        Ok(())
    }
}

/// Parses a flat `key = value` config covering [`TrainConfig`] and [`HeadConfig`].
///
/// Blank lines and `#` comments are ignored; every key is optional. `input_dim` is not a key,
/// it comes from the data, so the returned head config carries `input_dim` unchanged from
/// `head`.
pub fn parse_config(text: &str, train: &mut TrainConfig, head: &mut HeadConfig) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        let float = || {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("line {lineno}: `{key}` needs a number, got `{value}`")))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("line {lineno}: `{key}` needs a non-negative integer, got `{value}`")))
        };
        match key {
            "learning_rate" => train.learning_rate = float()?,
            "scheduler_factor" => train.scheduler_factor = float()?,
            "scheduler_patience" => train.scheduler_patience = count()?,
            "weight_decay" => train.weight_decay = float()?,
            "max_epochs" => train.max_epochs = count()?,
            "batch_size" => train.batch_size = count()?,
            "early_stop_patience" => train.early_stop_patience = count()?,
            "seed" => {
                train.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::Config(format!("line {lineno}: `seed` needs a u64, got `{value}`")))?
            }
            "min_improvement" => train.min_improvement = float()?,
            "hidden" => head.hidden = count()?,
            "rff_dim" => head.rff_dim = count()?,
            "spectral_bound" => head.spectral_bound = float()?,
            "ridge" => head.ridge = float()?,
            "mean_field_lambda" => head.mean_field_lambda = float()?,
            "k_samples" => head.k_samples = count()?,
            "prior_std" => head.prior_std = float()?,
            other => return Err(Error::Config(format!("line {lineno}: unknown key `{other}`"))),
        }
    }
    train.validate()?;
    Ok(())
}
