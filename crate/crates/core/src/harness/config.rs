use serde::{Deserialize, Serialize};

use crate::agent::{SacConfig, StrategyConfig, Variant};
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::replay::{
    EreConfig, PerConfig, DEFAULT_CAPACITY, DEFAULT_WARMUP, DEFAULT_XI, DEFAULT_ZETA_TH,
};

/// Everything needed to reproduce one experiment (all seeds of one variant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvKind,
    pub variant: Variant,
    /// Display name; defaults to the variant name.
    pub label: Option<String>,
    pub total_steps: u64,
    pub unit_steps: u64,
    pub seeds: Vec<u64>,
    pub sac: SacConfig,
    pub capacity: usize,
    pub warmup: usize,
    pub zeta_th: f64,
    pub xi: usize,
    pub per: PerConfig,
    pub ere: EreConfig,
    pub eval_episodes: usize,
    /// Final units averaged into the target score.
    pub n_f: usize,
    pub smoothing_window: usize,
}

impl RunConfig {
    pub fn new(env: EnvKind, variant: Variant) -> Self {
        let (total_steps, n_f) = match env {
            EnvKind::Pendulum => (100_000, 50),
            EnvKind::Reacher => (200_000, 100),
        };
        Self {
            env,
            variant,
            label: None,
            total_steps,
            unit_steps: env.default_unit_steps() as u64,
            seeds: (0..5).collect(),
            sac: SacConfig::default(),
            capacity: DEFAULT_CAPACITY,
            warmup: DEFAULT_WARMUP,
            zeta_th: DEFAULT_ZETA_TH,
            xi: DEFAULT_XI,
            per: PerConfig::default(),
            ere: EreConfig::default(),
            eval_episodes: 5,
            n_f,
            smoothing_window: 20,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.variant.name().to_string())
    }

    pub fn units(&self) -> u64 {
        self.total_steps / self.unit_steps
    }

    pub fn validate(&self) -> Result<()> {
        self.sac.validate()?;
        if self.unit_steps == 0 || self.total_steps == 0 {
            return Err(Error::Config(
                "total_steps and unit_steps must be positive".into(),
            ));
        }
        if !self.total_steps.is_multiple_of(self.unit_steps) {
            return Err(Error::Config(format!(
                "total_steps ({}) must be a multiple of unit_steps ({})",
                self.total_steps, self.unit_steps
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.xi == 0 {
            return Err(Error::Config("xi must be at least 1".into()));
        }
        if self.capacity == 0 || self.eval_episodes == 0 || self.smoothing_window == 0 {
            return Err(Error::Config(
                "capacity, eval_episodes and smoothing_window must be positive".into(),
            ));
        }
        if !self.zeta_th.is_finite() {
            return Err(Error::Config("zeta_th must be finite".into()));
        }
        if self.n_f == 0 {
            return Err(Error::Config("n_f must be positive".into()));
        }
        Ok(())
    }

    pub fn strategy_config(&self) -> StrategyConfig {
        StrategyConfig {
            variant: self.variant,
            capacity: self.capacity,
            warmup: self.warmup,
            batch_size: self.sac.batch_size,
            zeta_th: self.zeta_th,
            xi: self.xi,
            per: self.per,
            ere: self.ere,
            total_steps: self.total_steps,
            updates_per_episode: self.env.spec().max_episode_steps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_design_table() {
        let c = RunConfig::new(EnvKind::Pendulum, Variant::Isac);
        assert_eq!(c.sac.lr, 5e-4);
        assert_eq!(c.sac.batch_size, 50);
        assert_eq!(c.sac.gamma, 0.99);
        assert_eq!(c.sac.soft_update_factor, 1e-2);
        assert_eq!(c.sac.hidden, vec![256, 256]);
        assert_eq!(c.capacity, 1_000_000);
        assert_eq!(c.zeta_th, 0.5);
        assert_eq!(c.xi, 10);
        assert_eq!(c.per.beta1, 0.6);
        assert_eq!(c.per.beta2_start, 0.4);
        assert_eq!(c.ere.eta0, 0.996);
        assert_eq!(c.ere.eta1, 1.0);
        assert_eq!(c.unit_steps, 1000);
        assert_eq!(c.units(), 100);
        assert_eq!(
            RunConfig::new(EnvKind::Reacher, Variant::Sac).unit_steps,
            500
        );
        c.validate().unwrap();
    }

    #[test]
    fn rejects_ragged_units_and_duplicate_seeds() {
        let mut c = RunConfig::new(EnvKind::Pendulum, Variant::Sac);
        c.total_steps = 1500;
        assert!(c.validate().is_err());
        let mut c = RunConfig::new(EnvKind::Pendulum, Variant::Sac);
        c.seeds = vec![1, 1];
        assert!(c.validate().is_err());
    }
}
