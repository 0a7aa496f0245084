//! Tanh-squashed diagonal Gaussian policy head.
//!
//! The network emits `[μ | log σ]`. Actions are `a = scale·tanh(μ + σ·ε) + offset`
//! with `ε ~ N(0, I)`, and
//!
//! ```text
//! log π(a|s) = Σ_d [ −ε_d²/2 − log σ_d − log(2π)/2 − log(1 − tanh²(u_d) + 1e-6) − log scale_d ]
//! ```

use rand::Rng;
use rand_distr::StandardNormal;

use crate::envs::EnvSpec;
use crate::error::{check_dim, Error, Result};
use crate::nn::{ForwardCache, Gradients, Matrix, MlpParams};

pub const TANH_EPS: f64 = 1e-6;
const HALF_LOG_TWO_PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq)]
pub struct SquashedGaussian {
    act_dim: usize,
    scale: Vec<f64>,
    offset: Vec<f64>,
    log_std_min: f64,
    log_std_max: f64,
}

/// A reparameterized batch of actions together with what the backward pass
/// needs.
#[derive(Debug, Clone)]
pub struct PolicyBatch {
    pub actions: Matrix,
    pub log_probs: Vec<f64>,
    cache: ForwardCache,
    squashed: Matrix,
    sigma: Matrix,
    noise: Matrix,
    log_std_active: Vec<bool>,
}

impl SquashedGaussian {
    pub fn new(spec: &EnvSpec, log_std_min: f64, log_std_max: f64) -> Self {
        let scale = spec
            .action_low
            .iter()
            .zip(&spec.action_high)
            .map(|(lo, hi)| (hi - lo) / 2.0)
            .collect();
        let offset = spec
            .action_low
            .iter()
            .zip(&spec.action_high)
            .map(|(lo, hi)| (hi + lo) / 2.0)
            .collect();
        Self {
            act_dim: spec.act_dim,
            scale,
            offset,
            log_std_min,
            log_std_max,
        }
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn noise<R: Rng + ?Sized>(&self, rows: usize, rng: &mut R) -> Matrix {
        Matrix::from_fn(rows, self.act_dim, |_, _| rng.sample(StandardNormal))
    }

    fn check_output(&self, policy: &MlpParams) -> Result<()> {
        check_dim("policy output", 2 * self.act_dim, policy.output_dim())
    }

    /// Actions and log-probabilities for each row of `states` under the
    /// given standard-normal `noise` (`rows × act_dim`).
    pub fn forward(
        &self,
        policy: &MlpParams,
        states: &Matrix,
        noise: &Matrix,
    ) -> Result<PolicyBatch> {
        self.check_output(policy)?;
        check_dim("policy noise rows", states.rows(), noise.rows())?;
        check_dim("policy noise cols", self.act_dim, noise.cols())?;
        let (out, cache) = policy.forward_batch(states)?;
        if !out.is_finite() {
            return Err(Error::Numerical("non-finite policy network output".into()));
        }
        let (b, d) = (states.rows(), self.act_dim);
        let mut actions = Matrix::zeros(b, d);
        let mut squashed = Matrix::zeros(b, d);
        let mut sigma = Matrix::zeros(b, d);
        let mut log_probs = vec![0.0; b];
        let mut log_std_active = vec![false; b * d];
        for i in 0..b {
            let row = out.row(i);
            for j in 0..d {
                let mu = row[j];
                let raw = row[d + j];
                let log_std = raw.clamp(self.log_std_min, self.log_std_max);
                log_std_active[i * d + j] = raw >= self.log_std_min && raw <= self.log_std_max;
                let s = log_std.exp();
                let eps = noise.get(i, j);
                let t = (mu + s * eps).tanh();
                squashed.set(i, j, t);
                sigma.set(i, j, s);
                actions.set(i, j, self.scale[j] * t + self.offset[j]);
                log_probs[i] += -0.5 * eps * eps
                    - log_std
                    - HALF_LOG_TWO_PI
                    - (1.0 - t * t + TANH_EPS).ln()
                    - self.scale[j].ln();
            }
        }
        Ok(PolicyBatch {
            actions,
            log_probs,
            cache,
            squashed,
            sigma,
            noise: noise.clone(),
            log_std_active,
        })
    }

    /// Gradient of `Σ_i [dlogp_i·log π_i + Σ_d dact_{i,d}·a_{i,d}]` with
    /// respect to the policy parameters.
    pub fn backward(
        &self,
        policy: &MlpParams,
        batch: &PolicyBatch,
        dlogp: &[f64],
        dact: &Matrix,
    ) -> Result<Gradients> {
        let (b, d) = (batch.actions.rows(), self.act_dim);
        check_dim("policy dlogp", b, dlogp.len())?;
        check_dim("policy dact rows", b, dact.rows())?;
        check_dim("policy dact cols", d, dact.cols())?;
        let mut upstream = Matrix::zeros(b, 2 * d);
        for (i, &g) in dlogp.iter().enumerate() {
            for j in 0..d {
                let t = batch.squashed.get(i, j);
                let one_minus = 1.0 - t * t;
                // ∂/∂u of −log(1 − tanh²u + eps)
                let squash_term = 2.0 * t * one_minus / (one_minus + TANH_EPS);
                let du = g * squash_term + dact.get(i, j) * self.scale[j] * one_minus;
                let dls = if batch.log_std_active[i * d + j] {
                    -g + du * batch.sigma.get(i, j) * batch.noise.get(i, j)
                } else {
                    0.0
                };
                upstream.set(i, j, du);
                upstream.set(i, d + j, dls);
            }
        }
        Ok(policy.backward_batch(&batch.cache, &upstream)?.0)
    }

    /// `scale·tanh(μ(s)) + offset`, no sampling.
    pub fn mean_action(&self, policy: &MlpParams, state: &[f64]) -> Result<Vec<f64>> {
        self.check_output(policy)?;
        let out = policy.forward(state)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite policy network output".into()));
        }
        Ok((0..self.act_dim)
            .map(|j| self.scale[j] * out[j].tanh() + self.offset[j])
            .collect())
    }

    /// One reparameterized draw for a single state.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        policy: &MlpParams,
        state: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, f64)> {
        let states = Matrix::from_vec(1, state.len(), state.to_vec());
        let noise = self.noise(1, rng);
        let pb = self.forward(policy, &states, &noise)?;
        Ok((pb.actions.into_vec(), pb.log_probs[0]))
    }
}
