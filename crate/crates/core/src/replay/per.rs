//! Proportional prioritized replay over a [`SumTree`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::ReplayBuffer;
use super::sum_tree::SumTree;
use super::transition::MiniBatch;
use crate::error::{Error, Result};

/// Added to |δ| so no transition ever becomes unsampleable.
pub const PRIORITY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerConfig {
    /// Prioritization exponent (β₁).
    pub beta1: f64,
    /// Importance-sampling exponent (β₂) at the start of training.
    pub beta2_start: f64,
    /// β₂ at the end of training.
    pub beta2_end: f64,
}

impl Default for PerConfig {
    fn default() -> Self {
        Self {
            beta1: 0.6,
            beta2_start: 0.4,
            beta2_end: 1.0,
        }
    }
}

impl PerConfig {
    /// β₂ annealed linearly over `total_steps`.
    pub fn beta2_at(&self, step: u64, total_steps: u64) -> f64 {
        let frac = if total_steps == 0 {
            1.0
        } else {
            (step as f64 / total_steps as f64).min(1.0)
        };
        self.beta2_start + (self.beta2_end - self.beta2_start) * frac
    }
}

/// `(N·P(i))^(−β₂)` before normalization.
pub fn importance_weight(n: usize, probability: f64, beta2: f64) -> f64 {
    (n as f64 * probability).powf(-beta2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerSample<T> {
    pub batch: MiniBatch<T>,
    /// Importance weights divided by their batch maximum.
    pub weights: Vec<f64>,
    pub slots: Vec<usize>,
}

/// Priorities for every buffer slot, stored as `p^β₁` in a sum tree.
#[derive(Debug, Clone)]
pub struct PrioritizedReplay {
    tree: SumTree,
    config: PerConfig,
    max_priority: f64,
}

impl PrioritizedReplay {
    pub fn new(capacity: usize, config: PerConfig) -> Self {
        Self {
            tree: SumTree::new(capacity),
            config,
            max_priority: 1.0,
        }
    }

    pub fn config(&self) -> &PerConfig {
        &self.config
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    /// Raw priority `p` for a slot (stored internally as `p^β₁`).
    pub fn set_priority(&mut self, slot: usize, priority: f64) {
        self.max_priority = self.max_priority.max(priority);
        self.tree.set(slot, priority.powf(self.config.beta1));
    }

    /// New transitions enter with the largest priority seen so far.
    pub fn on_insert(&mut self, slot: usize) {
        self.set_priority(slot, self.max_priority);
    }

    /// Sets `|δ_i| + ε` as the priority of each sampled slot.
    pub fn update_priorities(&mut self, slots: &[usize], td_errors: &[f64]) -> Result<()> {
        if slots.len() != td_errors.len() {
            return Err(Error::Dimension {
                context: "priority update",
                expected: slots.len(),
                actual: td_errors.len(),
            });
        }
        for (&slot, &delta) in slots.iter().zip(td_errors) {
            if slot >= self.tree.capacity() {
                return Err(Error::Internal(format!(
                    "priority slot {slot} out of range"
                )));
            }
            if !delta.is_finite() {
                return Err(Error::Numerical(format!("non-finite TD error {delta}")));
            }
            self.set_priority(slot, delta.abs() + PRIORITY_EPS);
        }
        Ok(())
    }

    /// Stratified proportional sampling over the given slot ranges.
    pub fn sample_slots<R: Rng + ?Sized>(
        &self,
        ranges: &[(usize, usize)],
        k: usize,
        beta2: f64,
        rng: &mut R,
    ) -> Result<(Vec<usize>, Vec<f64>)> {
        let masses: Vec<f64> = ranges
            .iter()
            .map(|&(lo, hi)| self.tree.range_sum(lo, hi))
            .collect();
        let total: f64 = masses.iter().sum();
        let eligible: usize = ranges.iter().map(|(lo, hi)| hi - lo).sum();
        if eligible == 0 {
            return Err(Error::EmptyBuffer);
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Internal(format!(
                "priority mass {total} is not positive"
            )));
        }
        let segment = total / k as f64;
        let mut slots = Vec::with_capacity(k);
        let mut raw = Vec::with_capacity(k);
        for i in 0..k {
            let mut u = segment * (i as f64 + rng.random::<f64>());
            let mut chosen = None;
            for (r, &(lo, hi)) in ranges.iter().enumerate() {
                if u < masses[r] || r + 1 == ranges.len() {
                    let slot = self
                        .tree
                        .find(self.tree.prefix_sum(lo) + u.min(masses[r]))?;
                    chosen = Some(slot.clamp(lo, hi - 1));
                    break;
                }
                u -= masses[r];
            }
            let slot = chosen.expect("at least one range");
            let p = self.tree.get(slot) / total;
            slots.push(slot);
            raw.push(importance_weight(eligible, p, beta2));
        }
        let max_w = raw.iter().copied().fold(0.0, f64::max);
        let weights = raw.into_iter().map(|w| w / max_w).collect();
        Ok((slots, weights))
    }
}

/// Proportional sample of `k` transitions from the whole buffer.
pub fn per_sample<T: Clone, R: Rng + ?Sized>(
    buffer: &ReplayBuffer<T>,
    per: &PrioritizedReplay,
    k: usize,
    beta2: f64,
    rng: &mut R,
) -> Result<PerSample<T>> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let (slots, weights) = per.sample_slots(&[(0, buffer.len())], k, beta2, rng)?;
    Ok(PerSample {
        batch: buffer.gather(&slots),
        weights,
        slots,
    })
}
