use rand::{Rng, RngCore};

use super::{ensure_finite, EnvSpec, Environment, StepResult};
use crate::error::Result;

pub const LINK_LENGTH: f64 = 0.1;
const DT: f64 = 0.05;
/// Joint acceleration per unit torque command (rad/s²).
const TORQUE_GAIN: f64 = 10.0;
/// Viscous damping on joint velocities (1/s).
const DAMPING: f64 = 2.0;
const JOINT_NOISE: f64 = 0.1;
const TARGET_RADIUS: f64 = 0.2;
pub const MAX_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReacherState {
    /// Shoulder angle and elbow angle (relative to the upper link).
    pub angles: [f64; 2],
    pub velocities: [f64; 2],
    pub target: [f64; 2],
}

impl ReacherState {
    pub fn fingertip(&self) -> [f64; 2] {
        forward_kinematics(self.angles)
    }

    /// Cartesian fingertip velocity, `J(θ)·θ̇`.
    pub fn fingertip_velocity(&self) -> [f64; 2] {
        let [a1, a2] = self.angles;
        let [w1, w2] = self.velocities;
        let (s1, c1) = a1.sin_cos();
        let (s12, c12) = (a1 + a2).sin_cos();
        [
            -LINK_LENGTH * s1 * w1 - LINK_LENGTH * s12 * (w1 + w2),
            LINK_LENGTH * c1 * w1 + LINK_LENGTH * c12 * (w1 + w2),
        ]
    }

    /// Fingertip minus target.
    pub fn displacement(&self) -> [f64; 2] {
        let tip = self.fingertip();
        [tip[0] - self.target[0], tip[1] - self.target[1]]
    }

    /// 11-dim observation: cos/sin of both joints (4), target (2), fingertip
    /// velocity (2), target-to-fingertip vector with a zero third axis (3).
    pub fn observation(&self) -> Vec<f64> {
        let [a1, a2] = self.angles;
        let v = self.fingertip_velocity();
        let d = self.displacement();
        vec![
            a1.cos(),
            a2.cos(),
            a1.sin(),
            a2.sin(),
            self.target[0],
            self.target[1],
            v[0],
            v[1],
            d[0],
            d[1],
            0.0,
        ]
    }
}

pub fn forward_kinematics(angles: [f64; 2]) -> [f64; 2] {
    let [a1, a2] = angles;
    [
        LINK_LENGTH * a1.cos() + LINK_LENGTH * (a1 + a2).cos(),
        LINK_LENGTH * a1.sin() + LINK_LENGTH * (a1 + a2).sin(),
    ]
}

/// Reward for reaching: `−‖d‖² − ‖a‖²`.
pub fn reach_reward(displacement: [f64; 2], action: &[f64]) -> f64 {
    let dist = displacement[0] * displacement[0] + displacement[1] * displacement[1];
    let effort: f64 = action.iter().map(|a| a * a).sum();
    -dist - effort
}

/// Two equal links driven by torque commands in [−1, 1]; 50-step episodes.
#[derive(Debug, Clone)]
pub struct Reacher {
    spec: EnvSpec,
    state: ReacherState,
    steps: usize,
}

impl Default for Reacher {
    fn default() -> Self {
        Self::new()
    }
}

impl Reacher {
    pub fn new() -> Self {
        Self {
            spec: Self::env_spec(),
            state: ReacherState::default(),
            steps: 0,
        }
    }

    pub fn env_spec() -> EnvSpec {
        EnvSpec {
            obs_dim: 11,
            act_dim: 2,
            action_low: vec![-1.0, -1.0],
            action_high: vec![1.0, 1.0],
            max_episode_steps: MAX_STEPS,
        }
    }

    pub fn state(&self) -> ReacherState {
        self.state
    }

    pub fn set_state(&mut self, state: ReacherState) {
        self.state = state;
        self.steps = 0;
    }

    /// Reachable workspace: the annulus between `|l1 − l2|` and `l1 + l2`.
    pub fn reach_annulus() -> (f64, f64) {
        (0.0, 2.0 * LINK_LENGTH)
    }
}

impl Environment for Reacher {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        let angles = [
            rng.random_range(-JOINT_NOISE..=JOINT_NOISE),
            rng.random_range(-JOINT_NOISE..=JOINT_NOISE),
        ];
        let (inner, outer) = Self::reach_annulus();
        let target = loop {
            let t = [
                rng.random_range(-TARGET_RADIUS..TARGET_RADIUS),
                rng.random_range(-TARGET_RADIUS..TARGET_RADIUS),
            ];
            let r = t[0].hypot(t[1]);
            if r < TARGET_RADIUS && r >= inner && r <= outer {
                break t;
            }
        };
        self.set_state(ReacherState {
            angles,
            velocities: [0.0; 2],
            target,
        });
        self.state.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let s = &self.state;
        ensure_finite(
            &[s.angles[0], s.angles[1], s.velocities[0], s.velocities[1]],
            "reacher state",
        )?;
        ensure_finite(action, "reacher action")?;
        let a = self.spec.clip_action(action);
        let s = &mut self.state;
        for ((torque, vel), angle) in a.iter().zip(&mut s.velocities).zip(&mut s.angles) {
            *vel += DT * (TORQUE_GAIN * torque - DAMPING * *vel);
            *angle += DT * *vel;
        }
        self.steps += 1;
        let next_state = self.state.observation();
        ensure_finite(&next_state, "reacher state")?;
        Ok(StepResult {
            next_state,
            reward: reach_reward(self.state.displacement(), &a),
            terminated: false,
            truncated: self.steps >= MAX_STEPS,
        })
    }

    fn observation(&self) -> Vec<f64> {
        self.state.observation()
    }
}
