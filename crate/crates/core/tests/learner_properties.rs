use isac_core::agent::{q_targets, Batch, SacAgent, SacConfig, Variant};
use isac_core::envs::{EnvKind, EnvSpec};
use isac_core::harness::{
    aggregate, run_training_with, steps_to_target, EvalRecord, RunConfig, RunOptions,
};
use isac_core::replay::Transition;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec() -> EnvSpec {
    EnvSpec {
        obs_dim: 3,
        act_dim: 2,
        action_low: vec![-1.0, -1.0],
        action_high: vec![1.0, 1.0],
        max_episode_steps: 10,
    }
}

fn agent(seed: u64) -> (SacAgent, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SacConfig {
        hidden: vec![8],
        ..SacConfig::default()
    };
    (SacAgent::new(&spec(), config, &mut rng).unwrap(), rng)
}

fn batch(rng: &mut ChaCha8Rng, n: usize) -> Batch {
    let ts: Vec<Transition> = (0..n)
        .map(|_| Transition {
            state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
            reward: rng.random_range(-1.0..1.0),
            next_state: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
            done: rng.random_bool(0.2),
        })
        .collect();
    Batch::from_transitions(&ts).unwrap()
}

fn records(grid: &[Vec<f64>]) -> Vec<EvalRecord> {
    grid.iter()
        .enumerate()
        .flat_map(|(w, s)| {
            s.iter().enumerate().map(move |(n, &r)| EvalRecord {
                seed: w as u64,
                unit: n as u64 + 1,
                env_steps: (n as u64 + 1) * 100,
                eval_return: r,
            })
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn targets_move_only_by_polyak_averaging(seed: u64, updates in 1usize..5) {
        let (mut a, mut rng) = agent(seed);
        for _ in 0..updates {
            let (t1, t2) = (a.target_critics().0.clone(), a.target_critics().1.clone());
            let b = batch(&mut rng, 6);
            a.update(&b, None, &mut rng).unwrap();
            let (mut e1, mut e2) = (t1, t2);
            e1.blend_from(a.critics().0, 0.01);
            e2.blend_from(a.critics().1, 0.01);
            prop_assert_eq!(a.target_critics().0, &e1);
            prop_assert_eq!(a.target_critics().1, &e2);
        }
    }

    #[test]
    fn targets_never_exceed_either_critic_term(seed: u64) {
        let (a, mut rng) = agent(seed);
        let b = batch(&mut rng, 8);
        let noise = a.head().noise(8, &mut rng);
        let alpha = a.alpha();
        let (t1, t2) = a.target_critics();
        let y = q_targets(a.head(), a.policy(), t1, t2, alpha, 0.99, &b, &noise).unwrap();
        let pb = a.head().forward(a.policy(), &b.next_states, &noise).unwrap();
        let input = b.next_states.hcat(&pb.actions);
        for critic in [t1, t2] {
            let q = critic.predict_batch(&input).unwrap();
            for (i, &yi) in y.iter().enumerate() {
                let term = b.rewards[i] + 0.99 * (1.0 - b.dones[i]) * (q.get(i, 0) - alpha * pb.log_probs[i]);
                prop_assert!(yi <= term + 1e-12);
            }
        }
    }

    #[test]
    fn temperature_stays_positive_and_rests_at_the_fixed_point(
        seed: u64,
        shifts in prop::collection::vec(-5.0f64..5.0, 1..50),
    ) {
        let (mut a, _) = agent(seed);
        let h = a.target_entropy();
        for s in &shifts {
            a.alpha_update_from_log_probs(&[-h + s; 4]).unwrap();
            prop_assert!(a.alpha() > 0.0);
        }
        let (mut fresh, _) = agent(seed);
        let before = fresh.log_alpha();
        fresh.alpha_update_from_log_probs(&[-h - 0.5, -h + 0.5]).unwrap();
        prop_assert_eq!(fresh.log_alpha(), before);
    }

    #[test]
    fn best_mean_return_grows_with_more_units(
        grid in (1usize..4, 2usize..30).prop_flat_map(|(w, n)| prop::collection::vec(prop::collection::vec(-50.0f64..50.0, n), w)),
    ) {
        let n = grid[0].len();
        let mut last = f64::NEG_INFINITY;
        for units in 1..=n {
            let prefix: Vec<Vec<f64>> = grid.iter().map(|s| s[..units].to_vec()).collect();
            let s = aggregate(&records(&prefix), Some(0.0), 1, 5).unwrap();
            prop_assert!(s.max_mean_return >= last);
            last = s.max_mean_return;
        }
    }

    #[test]
    fn steps_to_target_never_grow_as_the_target_drops(
        series in prop::collection::vec(-10.0f64..10.0, 1..60),
        a in -12.0f64..12.0,
        b in -12.0f64..12.0,
    ) {
        let steps: Vec<u64> = (1..=series.len() as u64).map(|n| n * 10).collect();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at = |t| steps_to_target(&series, &steps, t).map_or(u64::MAX, |v| v);
        prop_assert!(at(lo) <= at(hi));
    }
}

fn tiny_run(variant: Variant) -> RunConfig {
    let mut c = RunConfig::new(EnvKind::Pendulum, variant);
    c.total_steps = 600;
    c.unit_steps = 200;
    c.warmup = 100;
    c.capacity = 10_000;
    c.xi = 2;
    c.eval_episodes = 1;
    c.sac.hidden = vec![8];
    c
}

#[test]
fn one_gradient_step_per_environment_step() {
    for variant in Variant::ALL {
        let c = tiny_run(variant);
        let r = run_training_with(&c, 3, RunOptions::default()).unwrap();
        let taken = r.agent.gradient_steps_taken();
        assert_eq!(r.records.len(), 3, "{variant}");
        if variant == Variant::Isac {
            assert_eq!(taken, r.sdp.selections);
            assert!(taken > 0 && taken < c.total_steps);
        } else {
            // Training starts on the step that fills the warm-up.
            assert_eq!(taken, c.total_steps - c.warmup as u64 + 1, "{variant}");
        }
    }
}

#[test]
fn training_is_unchanged_by_evaluation() {
    let c = tiny_run(Variant::Isac);
    let with = run_training_with(&c, 5, RunOptions::default()).unwrap();
    let without = run_training_with(
        &c,
        5,
        RunOptions {
            skip_evaluation: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(without.records.is_empty());
    assert_eq!(with.training_rng_words, without.training_rng_words);
    assert_eq!(with.agent.policy(), without.agent.policy());
    assert_eq!(with.sdp, without.sdp);
}
