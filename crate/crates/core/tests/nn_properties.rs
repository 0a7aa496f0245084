use isac_core::nn::{
    adam_step, finite_diff_grad, Activation, AdamState, Gradients, Matrix, MlpParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn activation(i: u8) -> Activation {
    match i % 3 {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        _ => Activation::Identity,
    }
}

// Central differences with step 1e-6 carry about 1e-10 of rounding noise, so
// entries below 1e-4 are compared against that scale instead of their own.
fn fd_error(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-4))
        .fold(0.0, f64::max)
}

fn arch() -> impl Strategy<Value = (Vec<usize>, u8, u8, u64)> {
    (
        prop::collection::vec(1usize..=16, 3..=6).prop_map(|mut v| {
            // input, ≤3 hidden, output
            v.truncate(5);
            v
        }),
        0u8..3,
        0u8..3,
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn backward_matches_central_differences((sizes, h, o, seed) in arch()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = MlpParams::init(&sizes, activation(h), activation(o), &mut rng).unwrap();
        let rows = 4;
        let input = Matrix::from_fn(rows, sizes[0], |_, _| rng.random_range(-1.0..1.0));
        let upstream = Matrix::from_fn(rows, *sizes.last().unwrap(), |_, _| rng.random_range(-1.0..1.0));
        let loss = |p: &MlpParams| {
            let out = p.predict_batch(&input).unwrap();
            out.as_slice().iter().zip(upstream.as_slice()).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = net.forward_batch(&input).unwrap();
        let (g, _) = net.backward_batch(&cache, &upstream).unwrap();
        let fd = finite_diff_grad(loss, &net, 1e-6);
        prop_assert!(g.congruent_with(&net));
        prop_assert!(g.is_finite());
        let err = fd_error(&g.to_flat(), &fd.to_flat());
        prop_assert!(err <= 1e-5, "relative error {err}");
    }

    #[test]
    fn forward_is_reproducible((sizes, h, o, seed) in arch()) {
        let build = || MlpParams::init(&sizes, activation(h), activation(o), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (a, b) = (build(), build());
        prop_assert_eq!(&a, &b);
        let x: Vec<f64> = (0..sizes[0]).map(|i| i as f64 * 0.37 - 1.0).collect();
        let ya: Vec<u64> = a.forward(&x).unwrap().iter().map(|v| v.to_bits()).collect();
        let yb: Vec<u64> = b.forward(&x).unwrap().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(ya, yb);
    }

    #[test]
    fn adam_with_zero_gradients_is_identity((sizes, h, o, seed) in arch(), steps in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = MlpParams::init(&sizes, activation(h), activation(o), &mut rng).unwrap();
        let mut moved = net.clone();
        let mut state = AdamState::for_params(&net);
        let zero = Gradients::zeros_like(&net);
        for t in 1..=steps {
            adam_step(&mut moved, &zero, &mut state, 1e-3).unwrap();
            prop_assert_eq!(state.t, t as u64);
        }
        prop_assert_eq!(moved, net);
    }
}
