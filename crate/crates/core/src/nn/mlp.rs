//! Dense feedforward networks with hand-written reverse-mode gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{matmul_nn, matmul_nt, matmul_tn, Matrix};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation value.
    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer: `weight` is `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layers: Vec<Dense>,
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Cotangents for every parameter of an [`MlpParams`], layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Intermediate values of a batched forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
}

impl MlpParams {
    pub fn new(
        layers: Vec<Dense>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for layer in &layers {
            check_dim("layer bias", layer.output_dim(), layer.bias.len())?;
            if !layer.weight.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::Config("non-finite network parameter".into()));
            }
        }
        for pair in layers.windows(2) {
            check_dim("layer chaining", pair[0].output_dim(), pair[1].input_dim())?;
        }
        Ok(Self {
            layers,
            hidden_activation,
            output_activation,
        })
    }

    /// Fan-in scaled uniform initialization: every weight and bias of a layer
    /// is drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weight =
                    Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound));
                let bias = (0..fan_out)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect();
                Dense { weight, bias }
            })
            .collect();
        Self::new(layers, hidden_activation, output_activation)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Evaluates the network on one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_dim("mlp input", self.input_dim(), input.len())?;
        let x = Matrix::from_vec(1, input.len(), input.to_vec());
        Ok(self.forward_batch(&x)?.0.into_vec())
    }

    /// Evaluates the network on every row of `input` and keeps what the
    /// backward pass needs.
    pub fn forward_batch(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        check_dim("mlp input", self.input_dim(), input.cols())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut pre = matmul_nt(&current, &layer.weight);
            for r in 0..pre.rows() {
                for (v, b) in pre.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let act = self.activation_for(i);
            let mut out = pre.clone();
            if act != Activation::Identity {
                out.as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v = act.apply(*v));
            }
            inputs.push(current);
            pre_activations.push(pre);
            current = out;
        }
        Ok((
            current,
            ForwardCache {
                inputs,
                pre_activations,
            },
        ))
    }

    /// Forward pass without retaining intermediates.
    pub fn predict_batch(&self, input: &Matrix) -> Result<Matrix> {
        check_dim("mlp input", self.input_dim(), input.cols())?;
        let mut current = matmul_nt(input, &self.layers[0].weight);
        for i in 0..self.layers.len() {
            if i > 0 {
                current = matmul_nt(&current, &self.layers[i].weight);
            }
            let act = self.activation_for(i);
            let bias = &self.layers[i].bias;
            for r in 0..current.rows() {
                for (v, b) in current.row_mut(r).iter_mut().zip(bias) {
                    *v = act.apply(*v + b);
                }
            }
        }
        Ok(current)
    }

    /// Reverse-mode derivatives of `upstreamᵀ · f(input)` for one sample.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        check_dim("mlp input", self.input_dim(), input.len())?;
        check_dim("mlp upstream", self.output_dim(), upstream.len())?;
        let x = Matrix::from_vec(1, input.len(), input.to_vec());
        let (_, cache) = self.forward_batch(&x)?;
        let up = Matrix::from_vec(1, upstream.len(), upstream.to_vec());
        let (grads, dx) = self.backward_batch(&cache, &up)?;
        Ok((grads, dx.into_vec()))
    }

    /// Batched reverse pass. Row `b` of `upstream` is the cotangent of row `b`
    /// of the output; parameter gradients are summed over the batch.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        upstream: &Matrix,
    ) -> Result<(Gradients, Matrix)> {
        self.reverse(cache, upstream, true)
            .map(|(g, dx)| (g.expect("parameter gradients requested"), dx))
    }

    /// Cotangent with respect to the input only; parameter gradients are skipped.
    pub fn backward_input(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<Matrix> {
        self.reverse(cache, upstream, false).map(|(_, dx)| dx)
    }

    fn reverse(
        &self,
        cache: &ForwardCache,
        upstream: &Matrix,
        want_params: bool,
    ) -> Result<(Option<Gradients>, Matrix)> {
        check_dim("mlp upstream", self.output_dim(), upstream.cols())?;
        let batch = cache.inputs[0].rows();
        check_dim("mlp upstream rows", batch, upstream.rows())?;
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(if want_params { n } else { 0 });
        let mut biases = Vec::with_capacity(if want_params { n } else { 0 });
        let mut delta = upstream.clone();
        for i in (0..n).rev() {
            let act = self.activation_for(i);
            if act != Activation::Identity {
                for (d, p) in delta
                    .as_mut_slice()
                    .iter_mut()
                    .zip(cache.pre_activations[i].as_slice())
                {
                    *d *= act.derivative(*p);
                }
            }
            if want_params {
                weights.push(matmul_tn(&delta, &cache.inputs[i]));
                let mut db = vec![0.0; delta.cols()];
                for r in 0..delta.rows() {
                    for (acc, d) in db.iter_mut().zip(delta.row(r)) {
                        *acc += d;
                    }
                }
                biases.push(db);
            }
            delta = matmul_nn(&delta, &self.layers[i].weight);
        }
        let grads = want_params.then(|| {
            weights.reverse();
            biases.reverse();
            Gradients { weights, biases }
        });
        Ok((grads, delta))
    }

    /// Visits every scalar parameter in a fixed order (weights then bias,
    /// layer by layer).
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for layer in &mut self.layers {
            for w in layer.weight.as_mut_slice() {
                f(idx, w);
                idx += 1;
            }
            for b in &mut layer.bias {
                f(idx, b);
                idx += 1;
            }
        }
    }

    /// Polyak averaging: `self ← (1 − tau)·self + tau·source`.
    pub fn blend_from(&mut self, source: &MlpParams, tau: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (d, s) in dst
                .weight
                .as_mut_slice()
                .iter_mut()
                .zip(src.weight.as_slice())
            {
                *d = (1.0 - tau) * *d + tau * s;
            }
            for (d, s) in dst.bias.iter_mut().zip(&src.bias) {
                *d = (1.0 - tau) * *d + tau * s;
            }
        }
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.input_dim() == b.input_dim() && a.output_dim() == b.output_dim())
    }
}

impl Gradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            weights: params
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.weight.rows(), l.weight.cols()))
                .collect(),
            biases: params
                .layers
                .iter()
                .map(|l| vec![0.0; l.bias.len()])
                .collect(),
        }
    }

    pub fn congruent_with(&self, params: &MlpParams) -> bool {
        self.weights.len() == params.layers.len()
            && self.biases.len() == params.layers.len()
            && params.layers.iter().enumerate().all(|(i, l)| {
                self.weights[i].rows() == l.weight.rows()
                    && self.weights[i].cols() == l.weight.cols()
                    && self.biases[i].len() == l.bias.len()
            })
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    /// Iterates in the same order as [`MlpParams::for_each_param_mut`].
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.as_mut_slice().iter_mut().chain(b.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += b;
        }
    }
}
