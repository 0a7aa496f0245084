//! Replay storage and sampling: ring buffer, delayed-infusion staging,
//! return-score prioritization with on-policy mixing, and the PER / ERE
//! baseline samplers.

mod buffer;
mod ere;
mod per;
mod sdp;
mod snapshot;
mod sum_tree;
mod temp;
mod transition;

pub use buffer::{sample_uniform, ReplayBuffer, DEFAULT_CAPACITY};
pub use ere::{ere_sample, ere_window, EreConfig};
pub use per::{
    importance_weight, per_sample, PerConfig, PerSample, PrioritizedReplay, PRIORITY_EPS,
};
pub use sdp::{cosine_similarity, moo_mix, sdp_select, top_k_indices, SdpOutcome, DEFAULT_ZETA_TH};
pub use snapshot::{write_snapshot, SNAPSHOT_HEADER};
pub use sum_tree::SumTree;
pub use temp::TempBuffer;
pub use transition::{AugTransition, MiniBatch, Transition};

/// Delay length: episodes staged before a transfer into the replay buffer.
pub const DEFAULT_XI: usize = 10;
/// Transitions required in the replay buffer before sampling starts.
pub const DEFAULT_WARMUP: usize = 1000;
