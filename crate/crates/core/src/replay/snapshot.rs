//! Debug dump of a replay buffer as tab-separated text.
//!
//! One header line, then one line per transition in insertion order:
//!
//! ```text
//! state  action  reward  next_state  done  rho  episode_id
//! 0.01 -0.002 0.003 0  -0.4  1  0.012 -0.01 0.002 0.1  0  57  3
//! ```
//!
//! Columns are separated by tabs (shown as two spaces above) and vector
//! fields by single spaces; `done` is 0/1; a pending `rho` is
//! written as `pending`.

use std::io::Write;

use super::buffer::ReplayBuffer;
use super::transition::AugTransition;
use crate::error::Result;

pub const SNAPSHOT_HEADER: &str = "state\taction\treward\tnext_state\tdone\trho\tepisode_id";

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_snapshot<W: Write>(buffer: &ReplayBuffer<AugTransition>, mut out: W) -> Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    for t in buffer.iter() {
        let tr = &t.transition;
        let rho = t
            .rho
            .map_or_else(|| "pending".to_string(), |r| r.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            join(&tr.state),
            join(&tr.action),
            tr.reward,
            join(&tr.next_state),
            u8::from(tr.done),
            rho,
            t.episode_id
        )?;
    }
    Ok(())
}
