//! Native continuous-control tasks: a cart-pole balancing task standing in
//! for InvertedPendulum and a kinematic two-link reacher.
//!
//! Swimmer is not provided. Its reward would be the forward velocity of the
//! body minus a small control cost, `v_x(t+1) − 0.0001·‖a_t‖²`, but the
//! viscous-fluid dynamics behind it are out of reach for a native model.

mod pendulum;
mod reacher;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pendulum::{CartPole, CartPoleState};
pub use reacher::{Reacher, ReacherState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.act_dim == 0 || self.max_episode_steps == 0 {
            return Err(Error::Config(
                "environment dimensions must be positive".into(),
            ));
        }
        if self.action_low.len() != self.act_dim || self.action_high.len() != self.act_dim {
            return Err(Error::Config("action bounds do not match act_dim".into()));
        }
        if self
            .action_low
            .iter()
            .zip(&self.action_high)
            .any(|(lo, hi)| lo >= hi)
        {
            return Err(Error::Config("action_low must be below action_high".into()));
        }
        Ok(())
    }

    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// The task failed (e.g. the pole toppled); bootstrapping stops here.
    pub terminated: bool,
    /// The episode hit its time limit; the state is not terminal.
    pub truncated: bool,
}

impl StepResult {
    pub fn episode_over(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// A resettable, seeded episodic task.
pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;
    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
    fn observation(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Pendulum,
    Reacher,
}

impl EnvKind {
    pub fn make(self) -> Box<dyn Environment> {
        match self {
            EnvKind::Pendulum => Box::new(CartPole::new()),
            EnvKind::Reacher => Box::new(Reacher::new()),
        }
    }

    pub fn spec(self) -> EnvSpec {
        match self {
            EnvKind::Pendulum => CartPole::env_spec(),
            EnvKind::Reacher => Reacher::env_spec(),
        }
    }

    /// Environment steps per training unit.
    pub fn default_unit_steps(self) -> usize {
        match self {
            EnvKind::Pendulum => 1000,
            EnvKind::Reacher => 500,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Pendulum => "pendulum",
            EnvKind::Reacher => "reacher",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(EnvKind::Pendulum),
            "reacher" => Ok(EnvKind::Reacher),
            other => Err(Error::Config(format!("unknown environment `{other}`"))),
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite {what}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_and_build_matching_specs() {
        for kind in [EnvKind::Pendulum, EnvKind::Reacher] {
            assert_eq!(kind.name().parse::<EnvKind>().unwrap(), kind);
            assert_eq!(kind.make().spec(), &kind.spec());
            kind.spec().validate().unwrap();
        }
        assert!("swimmer".parse::<EnvKind>().is_err());
        assert_eq!(EnvKind::Reacher.default_unit_steps(), 500);
    }

    #[test]
    fn clipping_respects_each_dimension() {
        let spec = EnvSpec {
            obs_dim: 1,
            act_dim: 2,
            action_low: vec![-1.0, 0.0],
            action_high: vec![1.0, 3.0],
            max_episode_steps: 1,
        };
        assert_eq!(spec.clip_action(&[5.0, -2.0]), vec![1.0, 0.0]);
        assert_eq!(spec.clip_action(&[0.5, 2.0]), vec![0.5, 2.0]);
        let flipped = EnvSpec {
            action_low: vec![1.0, 0.0],
            ..spec
        };
        assert!(flipped.validate().is_err());
    }
}
