use serde::{Deserialize, Serialize};

/// One environment step `(s, a, r, s', done)`.
///
/// `done` is true only on genuine termination; hitting the time limit leaves
/// it false so the critic still bootstraps through the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// A transition tagged with the return of the episode it came from.
///
/// `rho` stays `None` until the episode ends and its return is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugTransition {
    pub transition: Transition,
    pub rho: Option<f64>,
    pub episode_id: u64,
}

impl AugTransition {
    pub fn pending(transition: Transition, episode_id: u64) -> Self {
        Self {
            transition,
            rho: None,
            episode_id,
        }
    }

    pub fn with_rho(transition: Transition, rho: f64, episode_id: u64) -> Self {
        Self {
            transition,
            rho: Some(rho),
            episode_id,
        }
    }
}

impl AsRef<Transition> for Transition {
    fn as_ref(&self) -> &Transition {
        self
    }
}

impl AsRef<Transition> for AugTransition {
    fn as_ref(&self) -> &Transition {
        &self.transition
    }
}

/// A training mini-batch; duplicates are allowed.
pub type MiniBatch<T> = Vec<T>;
