//! Agent checkpoints as a flat JSON document:
//!
//! ```text
//! {
//!   "format": "isac-checkpoint",
//!   "version": 1,
//!   "env": { obs_dim, act_dim, action_low, action_high, max_episode_steps },
//!   "config": { ...SacConfig... },
//!   "networks": { "policy": ..., "q1": ..., "q2": ..., "q1_target": ..., "q2_target": ... },
//!   "log_alpha": -1.2,
//!   "optimizers": { "policy": ..., "q1": ..., "q2": ..., "log_alpha": ... },
//!   "gradient_steps": 12345
//! }
//! ```
//!
//! Each network is `{ layers: [{ weight: { rows, cols, data }, bias }], hidden_activation, output_activation }`
//! with row-major weights of shape `out × in`. Optimizer entries hold the
//! Adam moments `m`, `v`, the step count `t` and the β/ε constants.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::SacConfig;
use super::policy::SquashedGaussian;
use super::sac::SacAgent;
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{AdamState, MlpParams};

pub const CHECKPOINT_FORMAT: &str = "isac-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub env: EnvSpec,
    pub config: SacConfig,
    pub networks: BTreeMap<String, MlpParams>,
    pub log_alpha: f64,
    pub optimizers: BTreeMap<String, AdamState>,
    pub gradient_steps: u64,
}

impl Checkpoint {
    pub fn capture(agent: &SacAgent) -> Self {
        let networks = [
            ("policy", &agent.policy),
            ("q1", &agent.q1),
            ("q2", &agent.q2),
            ("q1_target", &agent.q1_target),
            ("q2_target", &agent.q2_target),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
        let optimizers = [
            ("policy", &agent.policy_opt),
            ("q1", &agent.q1_opt),
            ("q2", &agent.q2_opt),
            ("log_alpha", &agent.alpha_opt),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            env: agent.spec.clone(),
            config: agent.config.clone(),
            networks,
            log_alpha: agent.log_alpha,
            optimizers,
            gradient_steps: agent.gradient_steps_taken,
        }
    }

    pub fn restore(self) -> Result<SacAgent> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!(
                "unexpected checkpoint format `{}`",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let mut networks = self.networks;
        let mut take_net = |name: &str| {
            networks
                .remove(name)
                .ok_or_else(|| Error::Format(format!("checkpoint is missing network `{name}`")))
        };
        let policy = take_net("policy")?;
        let q1 = take_net("q1")?;
        let q2 = take_net("q2")?;
        let q1_target = take_net("q1_target")?;
        let q2_target = take_net("q2_target")?;
        let mut optimizers = self.optimizers;
        let mut take_opt = |name: &str| {
            optimizers
                .remove(name)
                .ok_or_else(|| Error::Format(format!("checkpoint is missing optimizer `{name}`")))
        };
        let mut agent = SacAgent::from_networks(&self.env, self.config, policy, q1, q2)?;
        if !q1_target.same_shape(&agent.q1) || !q2_target.same_shape(&agent.q2) {
            return Err(Error::Format(
                "target critic shapes differ from critics".into(),
            ));
        }
        agent.q1_target = q1_target;
        agent.q2_target = q2_target;
        agent.policy_opt = take_opt("policy")?;
        agent.q1_opt = take_opt("q1")?;
        agent.q2_opt = take_opt("q2")?;
        agent.alpha_opt = take_opt("log_alpha")?;
        if agent.policy_opt.len() != agent.policy.num_params()
            || agent.q1_opt.len() != agent.q1.num_params()
            || agent.q2_opt.len() != agent.q2.num_params()
            || agent.alpha_opt.len() != 1
        {
            return Err(Error::Format(
                "optimizer state does not match network size".into(),
            ));
        }
        agent.log_alpha = self.log_alpha;
        agent.gradient_steps_taken = self.gradient_steps;
        agent.head = SquashedGaussian::new(
            &agent.spec,
            agent.config.log_std_min,
            agent.config.log_std_max,
        );
        Ok(agent)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trained() -> SacAgent {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let config = SacConfig {
            hidden: vec![4],
            ..SacConfig::default()
        };
        let mut agent = SacAgent::new(&EnvKind::Reacher.spec(), config, &mut rng).unwrap();
        agent.alpha_update_from_log_probs(&[1.0, 2.0]).unwrap();
        agent
            .critics_mut()
            .0
            .for_each_param_mut(|i, p| *p += i as f64 * 1e-3);
        agent
    }

    #[test]
    fn json_round_trip_restores_the_agent() {
        let agent = trained();
        let mut bytes = Vec::new();
        Checkpoint::capture(&agent).write(&mut bytes).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("\"version\":1"));
        let back = Checkpoint::read(bytes.as_slice())
            .unwrap()
            .restore()
            .unwrap();
        assert_eq!(Checkpoint::capture(&back), Checkpoint::capture(&agent));
        let s = [0.1; 11];
        assert_eq!(
            back.policy_mean_action(&s).unwrap(),
            agent.policy_mean_action(&s).unwrap()
        );
    }

    #[test]
    fn foreign_versions_and_missing_parts_fail() {
        let mut c = Checkpoint::capture(&trained());
        c.version = 99;
        assert!(matches!(c.clone().restore(), Err(Error::Format(_))));
        c.version = CHECKPOINT_VERSION;
        c.networks.remove("q2_target");
        assert!(matches!(c.restore(), Err(Error::Format(_))));
    }
}
