//! Replay strategies plugged into the per-step training loop.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sac::{Batch, SacAgent, UpdateStats};
use crate::error::{Error, Result};
use crate::replay::{
    ere_window, moo_mix, sample_uniform, sdp_select, AugTransition, EreConfig, PerConfig,
    PrioritizedReplay, ReplayBuffer, TempBuffer, Transition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sac,
    SacPer,
    SacPerEre,
    Isac,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Sac,
        Variant::SacPer,
        Variant::SacPerEre,
        Variant::Isac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sac => "sac",
            Variant::SacPer => "sac_per",
            Variant::SacPerEre => "sac_per_ere",
            Variant::Isac => "isac",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub variant: Variant,
    pub capacity: usize,
    pub warmup: usize,
    pub batch_size: usize,
    pub zeta_th: f64,
    pub xi: usize,
    pub per: PerConfig,
    pub ere: EreConfig,
    /// Training horizon used by the β₂ and η schedules.
    pub total_steps: u64,
    /// Updates in one full-length episode (ERE's `K`).
    pub updates_per_episode: usize,
}

/// Counters of how often sampled-data prioritization fired.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpStats {
    pub selections: u64,
    pub prioritized: u64,
}

impl SdpStats {
    pub fn fraction(&self) -> f64 {
        if self.selections == 0 {
            0.0
        } else {
            self.prioritized as f64 / self.selections as f64
        }
    }
}

/// Position of the current update in the training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainContext {
    /// Environment steps taken so far (1-based).
    pub global_step: u64,
    /// Steps taken in the current episode (1-based).
    pub episode_step: usize,
}

#[derive(Debug, Clone)]
enum Store {
    Uniform(ReplayBuffer<Transition>),
    Prioritized {
        buffer: ReplayBuffer<Transition>,
        per: PrioritizedReplay,
        ere: bool,
    },
    Isac {
        buffer: ReplayBuffer<AugTransition>,
        temp: TempBuffer,
    },
}

#[derive(Debug, Clone)]
pub struct ReplayStrategy {
    config: StrategyConfig,
    store: Store,
    sdp: SdpStats,
    flushes: u64,
}

impl ReplayStrategy {
    pub fn new(config: StrategyConfig) -> Result<Self> {
        if config.capacity == 0 || config.batch_size == 0 {
            return Err(Error::Config(
                "capacity and batch size must be positive".into(),
            ));
        }
        if config.xi == 0 {
            return Err(Error::Config("delay length xi must be at least 1".into()));
        }
        let store = match config.variant {
            Variant::Sac => Store::Uniform(ReplayBuffer::new(config.capacity)),
            Variant::SacPer | Variant::SacPerEre => Store::Prioritized {
                buffer: ReplayBuffer::new(config.capacity),
                per: PrioritizedReplay::new(config.capacity, config.per),
                ere: config.variant == Variant::SacPerEre,
            },
            Variant::Isac => Store::Isac {
                buffer: ReplayBuffer::new(config.capacity),
                temp: TempBuffer::new(),
            },
        };
        Ok(Self {
            config,
            store,
            sdp: SdpStats::default(),
            flushes: 0,
        })
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    /// Transitions available for sampling.
    pub fn buffer_len(&self) -> usize {
        match &self.store {
            Store::Uniform(b) => b.len(),
            Store::Prioritized { buffer, .. } => buffer.len(),
            Store::Isac { buffer, .. } => buffer.len(),
        }
    }

    pub fn ready(&self) -> bool {
        self.buffer_len() >= self.config.warmup.max(1)
    }

    pub fn sdp_stats(&self) -> SdpStats {
        self.sdp
    }

    pub fn flushes(&self) -> u64 {
        self.flushes
    }

    pub fn temp_buffer(&self) -> Option<&TempBuffer> {
        match &self.store {
            Store::Isac { temp, .. } => Some(temp),
            _ => None,
        }
    }

    pub fn isac_buffer(&self) -> Option<&ReplayBuffer<AugTransition>> {
        match &self.store {
            Store::Isac { buffer, .. } => Some(buffer),
            _ => None,
        }
    }

    pub fn prioritized(&self) -> Option<&PrioritizedReplay> {
        match &self.store {
            Store::Prioritized { per, .. } => Some(per),
            _ => None,
        }
    }

    /// Stores one environment step. ISAC stages it until its episode and
    /// the delay window close; the baselines insert it immediately.
    pub fn observe(&mut self, transition: &AugTransition) {
        match &mut self.store {
            Store::Uniform(b) => {
                b.push(transition.transition.clone());
            }
            Store::Prioritized { buffer, per, .. } => {
                let slot = buffer.push(transition.transition.clone());
                per.on_insert(slot);
            }
            Store::Isac { temp, .. } => temp.record_step(transition.clone()),
        }
    }

    /// Closes an episode. Returns whether staged data reached the buffer.
    pub fn end_episode(&mut self, episodic_return: f64) -> Result<bool> {
        match &mut self.store {
            Store::Isac { buffer, temp } => {
                temp.finalize_episode(episodic_return);
                let flushed = temp.flush_if_due(buffer, self.config.xi)?;
                if flushed {
                    self.flushes += 1;
                }
                Ok(flushed)
            }
            _ => Ok(false),
        }
    }

    /// Runs `gradient_steps` updates of `agent`, or nothing while the buffer
    /// is still warming up. `latest` is the transition just generated.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        agent: &mut SacAgent,
        latest: &AugTransition,
        ctx: TrainContext,
        rng: &mut R,
    ) -> Result<Option<UpdateStats>> {
        if !self.ready() {
            return Ok(None);
        }
        let mut last = None;
        for _ in 0..agent.config().gradient_steps {
            last = Some(self.one_update(agent, latest, ctx, rng)?);
        }
        Ok(last)
    }

    fn one_update<R: Rng + ?Sized>(
        &mut self,
        agent: &mut SacAgent,
        latest: &AugTransition,
        ctx: TrainContext,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let k = self.config.batch_size;
        match &mut self.store {
            Store::Uniform(buffer) => {
                let m = sample_uniform(buffer, k, rng)?;
                agent.update(&Batch::from_transitions(&m)?, None, rng)
            }
            Store::Prioritized { buffer, per, ere } => {
                let ranges = if *ere {
                    let eta = self
                        .config
                        .ere
                        .eta_at(ctx.global_step, self.config.total_steps);
                    let window = ere_window(
                        buffer.len(),
                        eta,
                        ctx.episode_step,
                        self.config.updates_per_episode,
                        self.config.ere.c_min,
                    );
                    buffer.recent_slot_ranges(window)
                } else {
                    vec![(0, buffer.len())]
                };
                let beta2 = self
                    .config
                    .per
                    .beta2_at(ctx.global_step, self.config.total_steps);
                let (slots, weights) = per.sample_slots(&ranges, k, beta2, rng)?;
                let m = buffer.gather(&slots);
                let stats = agent.update(&Batch::from_transitions(&m)?, Some(&weights), rng)?;
                per.update_priorities(&slots, &stats.td_errors)?;
                Ok(stats)
            }
            Store::Isac { buffer, .. } => {
                let b1 = sample_uniform(buffer, k, rng)?;
                let b2 = sample_uniform(buffer, k, rng)?;
                let outcome = sdp_select(b1, b2, self.config.zeta_th, rng)?;
                self.sdp.selections += 1;
                if outcome.prioritized {
                    self.sdp.prioritized += 1;
                }
                let (m, _) = moo_mix(outcome.batch, latest.clone(), rng)?;
                agent.update(&Batch::from_transitions(&m)?, None, rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::SacConfig;
    use crate::envs::EnvSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(variant: Variant) -> StrategyConfig {
        StrategyConfig {
            variant,
            capacity: 1000,
            warmup: 20,
            batch_size: 8,
            zeta_th: 0.5,
            xi: 2,
            per: PerConfig::default(),
            ere: EreConfig::default(),
            total_steps: 1000,
            updates_per_episode: 10,
        }
    }

    fn step(episode: u64, r: f64) -> AugTransition {
        AugTransition::pending(
            Transition {
                state: vec![r, 0.0],
                action: vec![0.0],
                reward: r,
                next_state: vec![0.0, r],
                done: false,
            },
            episode,
        )
    }

    fn agent(rng: &mut ChaCha8Rng) -> SacAgent {
        let spec = EnvSpec {
            obs_dim: 2,
            act_dim: 1,
            action_low: vec![-1.0],
            action_high: vec![1.0],
            max_episode_steps: 10,
        };
        let config = SacConfig {
            hidden: vec![4],
            batch_size: 8,
            ..SacConfig::default()
        };
        SacAgent::new(&spec, config, rng).unwrap()
    }

    fn feed(s: &mut ReplayStrategy, episodes: u64) {
        for e in 0..episodes {
            for t in 0..10 {
                s.observe(&step(e, (t as f64 - 4.0) * (e as f64 + 1.0)));
            }
            s.end_episode(0.0).unwrap();
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("td3".parse::<Variant>().is_err());
    }

    #[test]
    fn baselines_insert_immediately_isac_waits_for_the_delay() {
        for v in Variant::ALL {
            let mut s = ReplayStrategy::new(config(v)).unwrap();
            feed(&mut s, 1);
            let expected = if v == Variant::Isac { 0 } else { 10 };
            assert_eq!(s.buffer_len(), expected, "{v}");
            feed(&mut s, 1);
            assert_eq!(s.buffer_len(), 20, "{v}");
            assert!(s.ready());
        }
    }

    #[test]
    fn no_update_before_warmup() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = agent(&mut rng);
        let mut s = ReplayStrategy::new(config(Variant::Sac)).unwrap();
        feed(&mut s, 1);
        let ctx = TrainContext {
            global_step: 10,
            episode_step: 10,
        };
        assert!(s
            .train_step(&mut a, &step(0, 0.0), ctx, &mut rng)
            .unwrap()
            .is_none());
        assert_eq!(a.gradient_steps_taken(), 0);
    }

    #[test]
    fn every_variant_trains_once_ready() {
        for v in Variant::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut a = agent(&mut rng);
            let mut s = ReplayStrategy::new(config(v)).unwrap();
            feed(&mut s, 4);
            let ctx = TrainContext {
                global_step: 40,
                episode_step: 3,
            };
            let stats = s
                .train_step(&mut a, &step(9, 1.0), ctx, &mut rng)
                .unwrap()
                .unwrap();
            assert_eq!(stats.td_errors.len(), 8, "{v}");
            assert_eq!(s.sdp_stats().selections, u64::from(v == Variant::Isac));
        }
    }

    #[test]
    fn per_priorities_follow_td_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a = agent(&mut rng);
        let mut s = ReplayStrategy::new(config(Variant::SacPer)).unwrap();
        feed(&mut s, 3);
        let before = s.prioritized().unwrap().tree().total();
        assert_eq!(before, 30.0);
        let ctx = TrainContext {
            global_step: 30,
            episode_step: 1,
        };
        s.train_step(&mut a, &step(9, 1.0), ctx, &mut rng).unwrap();
        let tree = s.prioritized().unwrap().tree();
        assert_ne!(tree.total(), before);
        assert!(tree.is_consistent(1e-9));
    }

    #[test]
    fn zero_delay_is_rejected() {
        let mut c = config(Variant::Isac);
        c.xi = 0;
        assert!(ReplayStrategy::new(c).is_err());
    }
}
