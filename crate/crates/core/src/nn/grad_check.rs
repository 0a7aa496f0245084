//! Central finite differences, used as an independent check on the
//! analytic gradients.

use super::mlp::{Gradients, MlpParams};

/// Central-difference estimate of `∂loss/∂θ` for every parameter of `params`.
pub fn finite_diff_grad(
    mut loss: impl FnMut(&MlpParams) -> f64,
    params: &MlpParams,
    h: f64,
) -> Gradients {
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut grads = Gradients::zeros_like(params);
    let mut probe = params.clone();
    let n = params.num_params();
    let mut out = Vec::with_capacity(n);
    for target in 0..n {
        let original = nth_param(&mut probe, target);
        set_nth_param(&mut probe, target, original + h);
        let up = loss(&probe);
        set_nth_param(&mut probe, target, original - h);
        let down = loss(&probe);
        set_nth_param(&mut probe, target, original);
        out.push((up - down) / (2.0 * h));
    }
    for (g, v) in grads.iter_mut().zip(out) {
        *g = v;
    }
    grads
}

/// Central difference of a scalar function.
pub fn finite_diff_scalar(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Largest elementwise `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative error operands");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

fn nth_param(params: &mut MlpParams, n: usize) -> f64 {
    let mut value = 0.0;
    params.for_each_param_mut(|i, p| {
        if i == n {
            value = *p;
        }
    });
    value
}

fn set_nth_param(params: &mut MlpParams, n: usize, value: f64) {
    params.for_each_param_mut(|i, p| {
        if i == n {
            *p = value;
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        MlpParams::init(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap()
    }

    #[test]
    fn quadratic_loss_recovers_parameters() {
        let p = params();
        let g = finite_diff_grad(
            |q| {
                let mut s = 0.0;
                q.clone().for_each_param_mut(|_, v| s += *v * *v);
                0.5 * s
            },
            &p,
            1e-4,
        );
        let mut flat = Vec::new();
        p.clone().for_each_param_mut(|_, v| flat.push(*v));
        for (a, b) in g.iter().zip(flat) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let g = finite_diff_grad(|_| 4.2, &params(), 1e-6);
        assert!(g.iter().all(|v| v == 0.0));
    }

    #[test]
    fn relative_error_uses_floor() {
        assert_eq!(max_relative_error(&[0.0], &[0.0]), 0.0);
        assert!((max_relative_error(&[1.0, 2.0], &[1.0, 2.2]) - 0.2 / 2.2).abs() < 1e-15);
    }
}
