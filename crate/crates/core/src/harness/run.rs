//! The training/evaluation loop for one seed, and fan-out over seeds.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::agent::{ReplayStrategy, SacAgent, SdpStats, TrainContext};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::replay::{AugTransition, Transition};

const TRAIN_STREAM: u64 = 0;
const EVAL_STREAM: u64 = 1;

/// Mean deterministic-policy return after one training unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub seed: u64,
    pub unit: u64,
    pub env_steps: u64,
    pub eval_return: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub records: Vec<EvalRecord>,
    /// Set when a numerical fault aborted the run; `records` then holds the
    /// units completed before it.
    pub fault: Option<String>,
    pub sdp: SdpStats,
    pub flushes: u64,
    pub env_steps: u64,
    pub episodes: u64,
    /// Position of the training random stream when the run ended.
    pub training_rng_words: u128,
    pub agent: SacAgent,
    /// The replay state at the end of the run, if requested.
    pub replay: Option<ReplayStrategy>,
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Skips evaluation entirely (no records are produced).
    pub skip_evaluation: bool,
    /// Returns the replay strategy with the result.
    pub keep_replay: bool,
    /// Called after every record; returning `true` ends the run early.
    pub stop: Option<&'a mut StopFn<'a>>,
}

pub type StopFn<'a> = dyn FnMut(&[EvalRecord]) -> bool + 'a;

/// Mean undiscounted return of the mean policy over `episodes` episodes.
pub fn evaluate_policy(
    agent: &SacAgent,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    evaluate_with(|s| agent.policy_mean_action(s), env, episodes, rng)
}

/// Mean undiscounted return of an arbitrary deterministic controller.
pub fn evaluate_with(
    mut act: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Config(
            "evaluation needs at least one episode".into(),
        ));
    }
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut state = env.reset(rng);
        loop {
            let action = act(&state)?;
            let step = env.step(&action)?;
            total += step.reward;
            if step.episode_over() {
                break;
            }
            state = step.next_state;
        }
    }
    Ok(total / episodes as f64)
}

pub fn run_training(config: &RunConfig, seed: u64) -> Result<RunResult> {
    run_training_with(config, seed, RunOptions::default())
}

/// Trains one agent for `config.total_steps` environment steps, evaluating
/// the mean policy after every unit on a separate environment and random
/// stream. Deterministic in `(config, seed)`.
pub fn run_training_with(
    config: &RunConfig,
    seed: u64,
    mut options: RunOptions<'_>,
) -> Result<RunResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRAIN_STREAM);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed);
    eval_rng.set_stream(EVAL_STREAM);

    let spec = config.env.spec();
    let mut env = config.env.make();
    let mut eval_env = config.env.make();
    let mut agent = SacAgent::new(&spec, config.sac.clone(), &mut rng)?;
    let mut strategy = ReplayStrategy::new(config.strategy_config())?;

    let mut records = Vec::with_capacity(config.units() as usize);
    let mut fault = None;
    let mut state = env.reset(&mut rng);
    let mut episode_id = 0u64;
    let mut episode_step = 0usize;
    let mut episode_return = 0.0;
    let mut steps_done = 0u64;

    for global_step in 1..=config.total_steps {
        let outcome = (|| -> Result<()> {
            let action = if strategy.ready() {
                agent.policy_sample(&state, &mut rng)?.0
            } else {
                spec.action_low
                    .iter()
                    .zip(&spec.action_high)
                    .map(|(lo, hi)| rng.random_range(*lo..*hi))
                    .collect()
            };
            let step = env.step(&action)?;
            episode_step += 1;
            episode_return += step.reward;
            let latest = AugTransition::pending(
                Transition {
                    state: std::mem::take(&mut state),
                    action,
                    reward: step.reward,
                    next_state: step.next_state.clone(),
                    done: step.terminated,
                },
                episode_id,
            );
            strategy.observe(&latest);
            let ctx = TrainContext {
                global_step,
                episode_step,
            };
            if step.episode_over() {
                strategy.end_episode(episode_return)?;
            }
            strategy.train_step(&mut agent, &latest, ctx, &mut rng)?;
            if step.episode_over() {
                episode_id += 1;
                episode_step = 0;
                episode_return = 0.0;
                state = env.reset(&mut rng);
            } else {
                state = step.next_state;
            }
            Ok(())
        })();
        match outcome {
            Ok(()) => {}
            Err(e) if e.is_numerical() => {
                log::error!("seed {seed}: aborting at step {global_step}: {e}");
                fault = Some(format!("step {global_step}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
        steps_done = global_step;

        if global_step % config.unit_steps == 0 && !options.skip_evaluation {
            let eval = evaluate_policy(
                &agent,
                eval_env.as_mut(),
                config.eval_episodes,
                &mut eval_rng,
            );
            match eval {
                Ok(eval_return) => records.push(EvalRecord {
                    seed,
                    unit: global_step / config.unit_steps,
                    env_steps: global_step,
                    eval_return,
                }),
                Err(e) if e.is_numerical() => {
                    fault = Some(format!("evaluation after step {global_step}: {e}"));
                    break;
                }
                Err(e) => return Err(e),
            }
            log::debug!(
                "seed {seed} unit {}: eval return {:.3}",
                global_step / config.unit_steps,
                records.last().map_or(f64::NAN, |r| r.eval_return)
            );
            if let Some(stop) = options.stop.as_mut() {
                if stop(&records) {
                    break;
                }
            }
        }
    }

    Ok(RunResult {
        seed,
        records,
        fault,
        sdp: strategy.sdp_stats(),
        flushes: strategy.flushes(),
        env_steps: steps_done,
        episodes: episode_id,
        training_rng_words: rng.get_word_pos(),
        agent,
        replay: options.keep_replay.then_some(strategy),
    })
}

/// How to spread seeds over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled; falls back
    /// to sequential execution otherwise.
    Parallel,
}

/// Runs every seed of `config`. Results come back in seed order regardless
/// of execution mode.
pub fn run_seeds(config: &RunConfig, execution: Execution) -> Result<Vec<RunResult>> {
    config.validate()?;
    map_seeds(&config.seeds, execution, |seed| run_training(config, seed))
}

/// Applies `f` to every seed, in parallel when asked and available.
pub fn map_seeds<T: Send>(
    seeds: &[u64],
    execution: Execution,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            seeds.par_iter().map(|&s| f(s)).collect()
        }
        _ => seeds.iter().map(|&s| f(s)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Variant;
    use crate::envs::{EnvKind, EnvSpec, StepResult};

    fn small(variant: Variant) -> RunConfig {
        let mut c = RunConfig::new(EnvKind::Pendulum, variant);
        c.total_steps = 2000;
        c.seeds = vec![3];
        c.sac.hidden = vec![16, 16];
        c.warmup = 200;
        c
    }

    #[test]
    fn one_record_per_unit_and_deterministic() {
        for variant in Variant::ALL {
            let c = small(variant);
            let a = run_training(&c, 3).unwrap();
            let b = run_training(&c, 3).unwrap();
            assert_eq!(a.records.len(), 2, "{variant}");
            assert_eq!(a.records[1].env_steps, 2000);
            assert_eq!(a.records, b.records, "{variant}");
            assert!(a.fault.is_none());
        }
    }

    #[test]
    fn evaluation_leaves_training_stream_untouched() {
        let c = small(Variant::Isac);
        let with = run_training(&c, 9).unwrap();
        let without = run_training_with(
            &c,
            9,
            RunOptions {
                skip_evaluation: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(without.records.is_empty());
        assert_eq!(with.training_rng_words, without.training_rng_words);
        assert_eq!(with.agent.log_alpha(), without.agent.log_alpha());
        assert!(with.sdp.selections > 0);
        assert_eq!(with.sdp, without.sdp);
    }

    #[test]
    fn stop_callback_ends_run() {
        let c = small(Variant::Sac);
        let mut stop = |r: &[EvalRecord]| r.len() == 1;
        let res = run_training_with(
            &c,
            1,
            RunOptions {
                stop: Some(&mut stop),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.records.len(), 1);
        assert_eq!(res.env_steps, 1000);
    }

    struct OneStep(EnvSpec);

    impl Environment for OneStep {
        fn spec(&self) -> &EnvSpec {
            &self.0
        }
        fn reset(&mut self, _rng: &mut dyn RngCore) -> Vec<f64> {
            vec![0.0]
        }
        fn step(&mut self, _action: &[f64]) -> Result<StepResult> {
            Ok(StepResult {
                next_state: vec![0.0],
                reward: 1.0,
                terminated: true,
                truncated: false,
            })
        }
        fn observation(&self) -> Vec<f64> {
            vec![0.0]
        }
    }

    #[test]
    fn evaluation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut env = OneStep(EnvSpec {
            obs_dim: 1,
            act_dim: 1,
            action_low: vec![-1.0],
            action_high: vec![1.0],
            max_episode_steps: 1,
        });
        let r = evaluate_with(|_| Ok(vec![0.0]), &mut env, 5, &mut rng).unwrap();
        assert_eq!(r, 1.0);
        assert!(evaluate_with(|_| Ok(vec![0.0]), &mut env, 0, &mut rng).is_err());
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let mut c = small(Variant::Sac);
        c.seeds = vec![0, 1];
        c.total_steps = 1000;
        let p = run_seeds(&c, Execution::Parallel).unwrap();
        let s = run_seeds(&c, Execution::Sequential).unwrap();
        for (a, b) in p.iter().zip(&s) {
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.records, b.records);
        }
    }
}
