//! Emphasizing recent experience: each update samples only from a window of
//! the most recent transitions, shrinking geometrically with the update
//! index inside an episode.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::ReplayBuffer;
use super::transition::MiniBatch;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EreConfig {
    /// Recency factor at the start of training.
    pub eta0: f64,
    /// Recency factor at the end of training; 1 means no emphasis.
    pub eta1: f64,
    /// Smallest window.
    pub c_min: usize,
}

impl Default for EreConfig {
    fn default() -> Self {
        Self {
            eta0: 0.996,
            eta1: 1.0,
            c_min: 5000,
        }
    }
}

impl EreConfig {
    /// η annealed linearly from `eta0` to `eta1` over `total_steps`.
    pub fn eta_at(&self, step: u64, total_steps: u64) -> f64 {
        let frac = if total_steps == 0 {
            1.0
        } else {
            (step as f64 / total_steps as f64).min(1.0)
        };
        self.eta0 + (self.eta1 - self.eta0) * frac
    }
}

/// Window size `c_k = max(N·η^(k·1000/K), c_min)`, capped at `N`.
pub fn ere_window(
    n: usize,
    eta: f64,
    update_index: usize,
    updates_per_episode: usize,
    c_min: usize,
) -> usize {
    if n == 0 {
        return 0;
    }
    let k = updates_per_episode.max(1) as f64;
    let exponent = update_index as f64 * 1000.0 / k;
    let shrunk = (n as f64 * eta.powf(exponent)) as usize;
    shrunk.max(c_min).min(n).max(1)
}

/// `k` uniform draws from the `window` most recent transitions.
pub fn ere_sample<T: Clone, R: Rng + ?Sized>(
    buffer: &ReplayBuffer<T>,
    k: usize,
    window: usize,
    rng: &mut R,
) -> Result<MiniBatch<T>> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let slots = buffer.sample_recent_slots(k, window, rng)?;
    Ok(buffer.gather(&slots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_eta_covers_whole_buffer() {
        assert_eq!(ere_window(100_000, 1.0, 700, 1000, 5000), 100_000);
    }

    #[test]
    fn window_matches_direct_exponential() {
        // 1e5 · 0.996^500 = 13479.36…
        let direct = (1e5 * 0.996f64.powi(500)) as usize;
        assert_eq!(direct, 13_479);
        assert_eq!(ere_window(100_000, 0.996, 500, 1000, 5000), direct);
    }

    #[test]
    fn window_never_below_floor_or_above_size() {
        assert_eq!(ere_window(100_000, 0.9, 1000, 1000, 5000), 5000);
        assert_eq!(ere_window(3000, 0.9, 1000, 1000, 5000), 3000);
    }

    #[test]
    fn eta_anneals_linearly() {
        let c = EreConfig::default();
        assert_eq!(c.eta_at(0, 10), 0.996);
        assert!((c.eta_at(5, 10) - 0.998).abs() < 1e-15);
        assert_eq!(c.eta_at(10, 10), 1.0);
    }

    #[test]
    fn draws_stay_in_recent_window() {
        let mut buffer = ReplayBuffer::new(1000);
        for i in 0..1000usize {
            buffer.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = ere_sample(&buffer, 5000, 37, &mut rng).unwrap();
        assert!(batch.iter().all(|&v| v >= 963));
    }
}
