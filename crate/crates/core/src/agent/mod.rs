//! The soft actor-critic learner and the replay strategies that feed it.

mod checkpoint;
mod config;
mod policy;
mod sac;
mod strategy;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::SacConfig;
pub use policy::{PolicyBatch, SquashedGaussian, TANH_EPS};
pub use sac::{
    actor_loss, alpha_loss, critic_loss, q_targets, Batch, CriticStats, SacAgent, UpdateStats,
};
pub use strategy::{ReplayStrategy, SdpStats, StrategyConfig, TrainContext, Variant};
