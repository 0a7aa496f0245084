use rand::{Rng, RngCore};

use super::{ensure_finite, EnvSpec, Environment, StepResult};
use crate::error::Result;

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const POLE_HALF_LENGTH: f64 = 0.5;
const FORCE_SCALE: f64 = 10.0;
const DT: f64 = 0.02;
/// Pole angle (rad) beyond which the pole counts as toppled.
pub const TOPPLE_ANGLE: f64 = 0.2;
pub const MAX_STEPS: usize = 1000;
const RESET_NOISE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }

    /// Semi-implicit Euler step of the cart-pole equations of motion under a
    /// horizontal force (N).
    pub fn integrate(self, force: f64) -> CartPoleState {
        let total_mass = CART_MASS + POLE_MASS;
        let pole_moment = POLE_MASS * POLE_HALF_LENGTH;
        let (sin, cos) = self.theta.sin_cos();
        let temp = (force + pole_moment * self.theta_dot * self.theta_dot * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;
        let x_dot = self.x_dot + DT * x_acc;
        let theta_dot = self.theta_dot + DT * theta_acc;
        CartPoleState {
            x: self.x + DT * x_dot,
            x_dot,
            theta: self.theta + DT * theta_dot,
            theta_dot,
        }
    }
}

/// Pole balancing on a cart: +1 reward per step, ends when the pole passes
/// [`TOPPLE_ANGLE`] or after [`MAX_STEPS`] steps.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    state: CartPoleState,
    steps: usize,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: Self::env_spec(),
            state: CartPoleState::default(),
            steps: 0,
        }
    }

    pub fn env_spec() -> EnvSpec {
        EnvSpec {
            obs_dim: 4,
            act_dim: 1,
            action_low: vec![-1.0],
            action_high: vec![1.0],
            max_episode_steps: MAX_STEPS,
        }
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Places the system at `state` and restarts the step counter.
    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = state;
        self.steps = 0;
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut draw = || rng.random_range(-RESET_NOISE..=RESET_NOISE);
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.set_state(state);
        state.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        ensure_finite(&self.state.to_vec(), "cart-pole state")?;
        ensure_finite(action, "cart-pole action")?;
        let clipped = self.spec.clip_action(action);
        self.state = self.state.integrate(FORCE_SCALE * clipped[0]);
        self.steps += 1;
        let next_state = self.state.to_vec();
        ensure_finite(&next_state, "cart-pole state")?;
        let terminated = self.state.theta.abs() > TOPPLE_ANGLE;
        Ok(StepResult {
            next_state,
            reward: 1.0,
            terminated,
            truncated: !terminated && self.steps >= MAX_STEPS,
        })
    }

    fn observation(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
