use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpParams};
use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Adam moment accumulators for a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
        }
    }

    pub fn for_params(params: &MlpParams) -> Self {
        Self::new(params.num_params())
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Advances the step counter and returns the two bias corrections.
    fn begin_step<'a>(
        &mut self,
        mut grads: impl Iterator<Item = &'a f64>,
        len: usize,
        lr: f64,
    ) -> Result<(f64, f64)> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be > 0, got {lr}"
            )));
        }
        if len != self.m.len() {
            return Err(Error::Dimension {
                context: "adam gradient",
                expected: self.m.len(),
                actual: len,
            });
        }
        if let Some(bad) = grads.find(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!("non-finite gradient entry {bad}")));
        }
        self.t += 1;
        Ok((
            1.0 - self.beta1.powi(self.t as i32),
            1.0 - self.beta2.powi(self.t as i32),
        ))
    }

    /// Updates `params` against the moments starting at `offset`.
    fn apply(&mut self, offset: usize, params: &mut [f64], grads: &[f64], lr: f64, bc: (f64, f64)) {
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let m = &mut self.m[offset..offset + params.len()];
        let v = &mut self.v[offset..offset + params.len()];
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = flush_subnormal(b1 * m[i] + (1.0 - b1) * g);
            v[i] = flush_subnormal(b2 * v[i] + (1.0 - b2) * g * g);
            params[i] -= lr * (m[i] / bc.0) / ((v[i] / bc.1).sqrt() + eps);
        }
    }

    /// Adam step on a flat slice of parameters.
    pub fn step_slice(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::Dimension {
                context: "adam params",
                expected: self.m.len(),
                actual: params.len(),
            });
        }
        let bc = self.begin_step(grads.iter(), grads.len(), lr)?;
        self.apply(0, params, grads, lr, bc);
        Ok(())
    }
}

/// Moments of parameters whose gradient stays zero decay geometrically into
/// the subnormal range, where arithmetic is orders of magnitude slower.
#[inline]
fn flush_subnormal(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// One Adam update of `params` using `grads`; increments `state.t` by one.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !grads.congruent_with(params) || state.len() != params.num_params() {
        return Err(Error::Config(
            "gradient/optimizer shape does not match parameters".into(),
        ));
    }
    let len = params.num_params();
    let all = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.as_slice().iter().chain(b));
    let bc = state.begin_step(all, len, lr)?;
    let mut offset = 0;
    for ((layer, gw), gb) in params
        .layers_mut()
        .iter_mut()
        .zip(&grads.weights)
        .zip(&grads.biases)
    {
        let w = layer.weight.as_mut_slice();
        state.apply(offset, w, gw.as_slice(), lr, bc);
        offset += w.len();
        state.apply(offset, &mut layer.bias, gb, lr, bc);
        offset += gb.len();
    }
    Ok(())
}
