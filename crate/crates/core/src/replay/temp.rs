use super::buffer::ReplayBuffer;
use super::transition::AugTransition;
use crate::error::{Error, Result};

/// Staging area for recent episodes.
///
/// Transitions wait here until their episode's return is known and until
/// `xi` complete episodes have accumulated; then the whole lot moves into
/// the replay buffer at once.
#[derive(Debug, Clone, Default)]
pub struct TempBuffer {
    finished: Vec<Vec<AugTransition>>,
    current: Vec<AugTransition>,
}

impl TempBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Complete episodes waiting for the next flush.
    pub fn episodes_held(&self) -> usize {
        self.finished.len()
    }

    /// Transitions in the episode still being played.
    pub fn current_len(&self) -> usize {
        self.current.len()
    }

    /// All staged transitions, finished and in progress.
    pub fn len(&self) -> usize {
        self.finished.iter().map(Vec::len).sum::<usize>() + self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.finished.is_empty() && self.current.is_empty()
    }

    pub fn finished_episodes(&self) -> &[Vec<AugTransition>] {
        &self.finished
    }

    /// Appends a step to the episode in progress. Its score is cleared until
    /// [`finalize_episode`](Self::finalize_episode) stamps it.
    pub fn record_step(&mut self, mut transition: AugTransition) {
        transition.rho = None;
        self.current.push(transition);
    }

    /// Stamps `episodic_return` on every step of the episode in progress and
    /// closes it. Returns false (and stages nothing) if the episode is empty.
    pub fn finalize_episode(&mut self, episodic_return: f64) -> bool {
        if self.current.is_empty() {
            log::warn!("finalize_episode called with no recorded steps");
            return false;
        }
        let mut episode = std::mem::take(&mut self.current);
        for t in &mut episode {
            t.rho = Some(episodic_return);
        }
        self.finished.push(episode);
        true
    }

    /// Moves every finished episode into `buffer`, oldest first, once `xi`
    /// of them are held. Returns whether a transfer happened.
    pub fn flush_if_due(
        &mut self,
        buffer: &mut ReplayBuffer<AugTransition>,
        xi: usize,
    ) -> Result<bool> {
        if xi == 0 {
            return Err(Error::Config("delay length xi must be at least 1".into()));
        }
        if self.finished.len() < xi {
            return Ok(false);
        }
        for t in self.finished.drain(..).flatten() {
            buffer.push(t);
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::Transition;

    fn step(reward: f64, episode: u64) -> AugTransition {
        AugTransition::pending(
            Transition {
                state: vec![0.0],
                action: vec![0.0],
                reward,
                next_state: vec![0.0],
                done: false,
            },
            episode,
        )
    }

    fn play(temp: &mut TempBuffer, rewards: &[f64], episode: u64) {
        for &r in rewards {
            temp.record_step(step(r, episode));
        }
        temp.finalize_episode(rewards.iter().sum());
    }

    #[test]
    fn records_group_by_episode() {
        let mut temp = TempBuffer::new();
        temp.record_step(step(1.0, 0));
        assert_eq!(temp.len(), 1);
        temp.record_step(step(1.0, 0));
        temp.record_step(step(1.0, 0));
        assert_eq!(temp.current_len(), 3);
        assert!(temp.finalize_episode(3.0));
        assert_eq!(temp.finished_episodes()[0].len(), 3);
        temp.record_step(step(1.0, 1));
        assert_eq!(temp.current_len(), 1);
        assert_eq!(temp.episodes_held(), 1);
    }

    #[test]
    fn finalize_stamps_episode_return() {
        let mut temp = TempBuffer::new();
        play(&mut temp, &[1.0, 1.0, 1.0], 0);
        play(&mut temp, &[2.0, 3.0], 1);
        let eps = temp.finished_episodes();
        assert!(eps[0].iter().all(|t| t.rho == Some(3.0)));
        assert!(eps[1].iter().all(|t| t.rho == Some(5.0)));
    }

    #[test]
    fn reacher_length_episode_carries_its_sum() {
        let rewards: Vec<f64> = (0..50).map(|i| -0.15 - 0.001 * f64::from(i % 3)).collect();
        let expected: f64 = rewards.iter().sum();
        let mut temp = TempBuffer::new();
        play(&mut temp, &rewards, 4);
        assert!(temp.finished_episodes()[0]
            .iter()
            .all(|t| t.rho == Some(expected)));
    }

    #[test]
    fn empty_episode_is_ignored() {
        let mut temp = TempBuffer::new();
        assert!(!temp.finalize_episode(1.0));
        assert_eq!(temp.episodes_held(), 0);
    }

    #[test]
    fn xi_one_flushes_every_episode() {
        let mut temp = TempBuffer::new();
        let mut buffer = ReplayBuffer::new(100);
        play(&mut temp, &[1.0, 1.0], 0);
        assert!(temp.flush_if_due(&mut buffer, 1).unwrap());
        assert_eq!(buffer.len(), 2);
        assert!(temp.is_empty());
    }

    #[test]
    fn flush_waits_for_xi_episodes() {
        let mut temp = TempBuffer::new();
        let mut buffer = ReplayBuffer::new(1000);
        let mut total = 0;
        for e in 0..9u64 {
            let len = (e + 1) as usize;
            play(&mut temp, &vec![1.0; len], e);
            total += len;
            assert!(!temp.flush_if_due(&mut buffer, 10).unwrap());
            assert_eq!(buffer.len(), 0);
        }
        play(&mut temp, &[1.0; 10], 9);
        total += 10;
        assert!(temp.flush_if_due(&mut buffer, 10).unwrap());
        assert_eq!(buffer.len(), total);
        assert!(temp.is_empty());
        let ids: Vec<u64> = buffer.iter().map(|t| t.episode_id).collect();
        assert!(ids.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_xi_is_rejected() {
        let mut temp = TempBuffer::new();
        let mut buffer = ReplayBuffer::new(10);
        assert!(temp.flush_if_due(&mut buffer, 0).is_err());
    }
}
