//! Soft actor-critic learner with twin critics, target critics and an
//! adaptive entropy temperature.

use rand::Rng;

use super::config::SacConfig;
use super::policy::{PolicyBatch, SquashedGaussian};
use crate::envs::EnvSpec;
use crate::error::{check_dim, Error, Result};
use crate::nn::{adam_step, Activation, AdamState, Gradients, Matrix, MlpParams};
use crate::replay::Transition;

/// Column-stacked view of a mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    /// 1.0 for true terminations, 0.0 otherwise.
    pub dones: Vec<f64>,
}

impl Batch {
    pub fn from_transitions<T: AsRef<Transition>>(items: &[T]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Config("empty mini-batch".into()))?
            .as_ref();
        let (obs, act) = (first.state.len(), first.action.len());
        for t in items {
            let t = t.as_ref();
            check_dim("transition state", obs, t.state.len())?;
            check_dim("transition next_state", obs, t.next_state.len())?;
            check_dim("transition action", act, t.action.len())?;
        }
        let rows = |f: fn(&Transition) -> &Vec<f64>, cols| {
            let v: Vec<&[f64]> = items.iter().map(|t| f(t.as_ref()).as_slice()).collect();
            Matrix::from_rows(&v, cols)
        };
        Ok(Self {
            states: rows(|t| &t.state, obs),
            actions: rows(|t| &t.action, act),
            rewards: items.iter().map(|t| t.as_ref().reward).collect(),
            next_states: rows(|t| &t.next_state, obs),
            dones: items
                .iter()
                .map(|t| if t.as_ref().done { 1.0 } else { 0.0 })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// `mean_i w_i·(Q(s_i, a_i) − y_i)²`, its parameter gradient, and the
/// per-sample `Q − y`.
pub fn critic_loss(
    critic: &MlpParams,
    batch: &Batch,
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<(f64, Gradients, Vec<f64>)> {
    let n = batch.len();
    check_dim("critic targets", n, targets.len())?;
    if let Some(w) = weights {
        check_dim("critic weights", n, w.len())?;
    }
    let input = batch.states.hcat(&batch.actions);
    let (q, cache) = critic.forward_batch(&input)?;
    let mut loss = 0.0;
    let mut td = Vec::with_capacity(n);
    let mut upstream = Matrix::zeros(n, 1);
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        let delta = q.get(i, 0) - targets[i];
        loss += w * delta * delta;
        upstream.set(i, 0, 2.0 * w * delta / n as f64);
        td.push(delta);
    }
    let (grads, _) = critic.backward_batch(&cache, &upstream)?;
    Ok((loss / n as f64, grads, td))
}

/// `mean_i [α·log π(ã_i|s_i) − min_j Q_j(s_i, ã_i)]` with `ã_i`
/// reparameterized by `noise`. Returns the loss, its policy gradient and the
/// batch log-probabilities.
#[allow(clippy::too_many_arguments)]
pub fn actor_loss(
    head: &SquashedGaussian,
    policy: &MlpParams,
    q1: &MlpParams,
    q2: &MlpParams,
    alpha: f64,
    states: &Matrix,
    noise: &Matrix,
) -> Result<(f64, Gradients, Vec<f64>)> {
    let pb = head.forward(policy, states, noise)?;
    let n = states.rows();
    let input = states.hcat(&pb.actions);
    let (v1, c1) = q1.forward_batch(&input)?;
    let (v2, c2) = q2.forward_batch(&input)?;
    let mut loss = 0.0;
    let mut up1 = Matrix::zeros(n, 1);
    let mut up2 = Matrix::zeros(n, 1);
    for i in 0..n {
        let (a, b) = (v1.get(i, 0), v2.get(i, 0));
        loss += alpha * pb.log_probs[i] - a.min(b);
        // Ties route through the first critic.
        if a <= b {
            up1.set(i, 0, 1.0);
        } else {
            up2.set(i, 0, 1.0);
        }
    }
    let obs = states.cols();
    let act = head.act_dim();
    let g1 = q1.backward_input(&c1, &up1)?;
    let g2 = q2.backward_input(&c2, &up2)?;
    let scale = 1.0 / n as f64;
    let mut dact = Matrix::zeros(n, act);
    for i in 0..n {
        for j in 0..act {
            let dq = g1.get(i, obs + j) + g2.get(i, obs + j);
            dact.set(i, j, -dq * scale);
        }
    }
    let dlogp = vec![alpha * scale; n];
    let grads = head.backward(policy, &pb, &dlogp, &dact)?;
    Ok((loss * scale, grads, pb.log_probs))
}

/// `mean_i [−log α·(log π_i + H̄)]` and its derivative in `log α`.
pub fn alpha_loss(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let n = log_probs.len().max(1) as f64;
    let mean_term: f64 = log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / n;
    (-log_alpha * mean_term, -mean_term)
}

/// Soft Bellman targets `r + γ(1 − done)(min_j Q̄_j(s', ã') − α log π(ã'|s'))`.
#[allow(clippy::too_many_arguments)]
pub fn q_targets(
    head: &SquashedGaussian,
    policy: &MlpParams,
    q1_target: &MlpParams,
    q2_target: &MlpParams,
    alpha: f64,
    gamma: f64,
    batch: &Batch,
    noise: &Matrix,
) -> Result<Vec<f64>> {
    let pb = head.forward(policy, &batch.next_states, noise)?;
    let input = batch.next_states.hcat(&pb.actions);
    let t1 = q1_target.predict_batch(&input)?;
    let t2 = q2_target.predict_batch(&input)?;
    Ok((0..batch.len())
        .map(|i| {
            let soft_value = t1.get(i, 0).min(t2.get(i, 0)) - alpha * pb.log_probs[i];
            batch.rewards[i] + gamma * (1.0 - batch.dones[i]) * soft_value
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticStats {
    pub loss: f64,
    /// `Q₁(s, a) − y` per sample.
    pub td_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub td_errors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub(crate) config: SacConfig,
    pub(crate) spec: EnvSpec,
    pub(crate) head: SquashedGaussian,
    pub(crate) policy: MlpParams,
    pub(crate) q1: MlpParams,
    pub(crate) q2: MlpParams,
    pub(crate) q1_target: MlpParams,
    pub(crate) q2_target: MlpParams,
    pub(crate) log_alpha: f64,
    pub(crate) policy_opt: AdamState,
    pub(crate) q1_opt: AdamState,
    pub(crate) q2_opt: AdamState,
    pub(crate) alpha_opt: AdamState,
    pub(crate) gradient_steps_taken: u64,
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(spec: &EnvSpec, config: SacConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        spec.validate()?;
        let act = config.hidden_activation;
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden);
            s.push(output);
            s
        };
        let policy_sizes = sizes(spec.obs_dim, 2 * spec.act_dim);
        let critic_sizes = sizes(spec.obs_dim + spec.act_dim, 1);
        let policy = MlpParams::init(&policy_sizes, act, Activation::Identity, rng)?;
        let q1 = MlpParams::init(&critic_sizes, act, Activation::Identity, rng)?;
        let q2 = MlpParams::init(&critic_sizes, act, Activation::Identity, rng)?;
        Self::from_networks(spec, config, policy, q1, q2)
    }

    /// Builds an agent around given networks; targets start as exact copies
    /// of the critics.
    pub fn from_networks(
        spec: &EnvSpec,
        config: SacConfig,
        policy: MlpParams,
        q1: MlpParams,
        q2: MlpParams,
    ) -> Result<Self> {
        config.validate()?;
        check_dim("policy input", spec.obs_dim, policy.input_dim())?;
        check_dim("policy output", 2 * spec.act_dim, policy.output_dim())?;
        for q in [&q1, &q2] {
            check_dim("critic input", spec.obs_dim + spec.act_dim, q.input_dim())?;
            check_dim("critic output", 1, q.output_dim())?;
        }
        if !q1.same_shape(&q2) {
            return Err(Error::Config("twin critics must share a shape".into()));
        }
        Ok(Self {
            head: SquashedGaussian::new(spec, config.log_std_min, config.log_std_max),
            log_alpha: config.initial_log_alpha,
            policy_opt: AdamState::for_params(&policy),
            q1_opt: AdamState::for_params(&q1),
            q2_opt: AdamState::for_params(&q2),
            alpha_opt: AdamState::new(1),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            policy,
            q1,
            q2,
            spec: spec.clone(),
            config,
            gradient_steps_taken: 0,
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn head(&self) -> &SquashedGaussian {
        &self.head
    }

    pub fn policy(&self) -> &MlpParams {
        &self.policy
    }

    pub fn critics(&self) -> (&MlpParams, &MlpParams) {
        (&self.q1, &self.q2)
    }

    pub fn target_critics(&self) -> (&MlpParams, &MlpParams) {
        (&self.q1_target, &self.q2_target)
    }

    pub fn policy_mut(&mut self) -> &mut MlpParams {
        &mut self.policy
    }

    pub fn critics_mut(&mut self) -> (&mut MlpParams, &mut MlpParams) {
        (&mut self.q1, &mut self.q2)
    }

    pub fn target_critics_mut(&mut self) -> (&mut MlpParams, &mut MlpParams) {
        (&mut self.q1_target, &mut self.q2_target)
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn set_log_alpha(&mut self, log_alpha: f64) {
        self.log_alpha = log_alpha;
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn target_entropy(&self) -> f64 {
        self.config.target_entropy_for(self.spec.act_dim)
    }

    pub fn gradient_steps_taken(&self) -> u64 {
        self.gradient_steps_taken
    }

    /// Stochastic action and its log-probability.
    pub fn policy_sample<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, f64)> {
        self.head.sample(&self.policy, state, rng)
    }

    /// Deterministic (mean) action used for evaluation.
    pub fn policy_mean_action(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.head.mean_action(&self.policy, state)
    }

    pub fn compute_q_targets<R: Rng + ?Sized>(
        &self,
        batch: &Batch,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let noise = self.head.noise(batch.len(), rng);
        self.compute_q_targets_with_noise(batch, &noise)
    }

    pub fn compute_q_targets_with_noise(&self, batch: &Batch, noise: &Matrix) -> Result<Vec<f64>> {
        q_targets(
            &self.head,
            &self.policy,
            &self.q1_target,
            &self.q2_target,
            self.alpha(),
            self.config.gamma,
            batch,
            noise,
        )
    }

    /// One Adam step on both critics toward `targets`.
    pub fn critic_update(
        &mut self,
        batch: &Batch,
        targets: &[f64],
        weights: Option<&[f64]>,
    ) -> Result<CriticStats> {
        let (l1, g1, td) = critic_loss(&self.q1, batch, targets, weights)?;
        let (l2, g2, _) = critic_loss(&self.q2, batch, targets, weights)?;
        let loss = l1 + l2;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("critic loss is {loss}")));
        }
        adam_step(&mut self.q1, &g1, &mut self.q1_opt, self.config.lr)?;
        adam_step(&mut self.q2, &g2, &mut self.q2_opt, self.config.lr)?;
        Ok(CriticStats {
            loss,
            td_errors: td,
        })
    }

    /// One Adam step on the policy; critics are read but not changed.
    /// Returns the loss and the log-probabilities of the sampled actions.
    pub fn actor_update<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch,
        rng: &mut R,
    ) -> Result<(f64, Vec<f64>)> {
        let noise = self.head.noise(batch.len(), rng);
        self.actor_update_with_noise(&batch.states, &noise)
    }

    pub fn actor_update_with_noise(
        &mut self,
        states: &Matrix,
        noise: &Matrix,
    ) -> Result<(f64, Vec<f64>)> {
        let (loss, grads, log_probs) = actor_loss(
            &self.head,
            &self.policy,
            &self.q1,
            &self.q2,
            self.alpha(),
            states,
            noise,
        )?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("policy loss is {loss}")));
        }
        adam_step(
            &mut self.policy,
            &grads,
            &mut self.policy_opt,
            self.config.lr,
        )?;
        Ok((loss, log_probs))
    }

    /// Temperature step from already computed (detached) log-probabilities.
    pub fn alpha_update_from_log_probs(&mut self, log_probs: &[f64]) -> Result<f64> {
        let (_, grad) = alpha_loss(self.log_alpha, log_probs, self.target_entropy());
        let mut p = [self.log_alpha];
        self.alpha_opt.step_slice(&mut p, &[grad], self.config.lr)?;
        self.log_alpha = p[0];
        Ok(self.alpha())
    }

    /// Temperature step using fresh policy samples on `batch`.
    pub fn alpha_update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<f64> {
        let noise = self.head.noise(batch.len(), rng);
        let pb: PolicyBatch = self.head.forward(&self.policy, &batch.states, &noise)?;
        self.alpha_update_from_log_probs(&pb.log_probs)
    }

    /// Polyak-averages the critics into their targets.
    pub fn soft_update(&mut self) {
        let tau = self.config.soft_update_factor;
        self.q1_target.blend_from(&self.q1, tau);
        self.q2_target.blend_from(&self.q2, tau);
    }

    /// Full gradient step: targets, critics, policy, temperature, targets.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &Batch,
        weights: Option<&[f64]>,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let targets = self.compute_q_targets(batch, rng)?;
        let critic = self.critic_update(batch, &targets, weights)?;
        let (actor_loss, log_probs) = self.actor_update(batch, rng)?;
        let alpha = self.alpha_update_from_log_probs(&log_probs)?;
        self.soft_update();
        self.gradient_steps_taken += 1;
        Ok(UpdateStats {
            critic_loss: critic.loss,
            actor_loss,
            alpha,
            td_errors: critic.td_errors,
        })
    }
}
