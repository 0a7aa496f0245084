use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    pub gamma: f64,
    /// Polyak factor for the target critics.
    pub soft_update_factor: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub gradient_steps: usize,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    /// Defaults to `−act_dim` when unset.
    pub target_entropy: Option<f64>,
    pub log_std_min: f64,
    pub log_std_max: f64,
    pub initial_log_alpha: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            soft_update_factor: 1e-2,
            lr: 5e-4,
            batch_size: 50,
            gradient_steps: 1,
            hidden: vec![256, 256],
            hidden_activation: Activation::Relu,
            target_entropy: None,
            log_std_min: -20.0,
            log_std_max: 2.0,
            initial_log_alpha: 0.0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.soft_update_factor > 0.0 && self.soft_update_factor <= 1.0) {
            return Err(Error::Config(format!(
                "soft update factor must lie in (0, 1], got {}",
                self.soft_update_factor
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be > 0, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 || self.gradient_steps == 0 {
            return Err(Error::Config(
                "batch size and gradient steps must be positive".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if self.log_std_min >= self.log_std_max {
            return Err(Error::Config("log-std clamp range is empty".into()));
        }
        Ok(())
    }

    pub fn target_entropy_for(&self, act_dim: usize) -> f64 {
        self.target_entropy.unwrap_or(-(act_dim as f64))
    }
}
