//! Minimal dense-network kernel: forward evaluation, reverse-mode gradients,
//! Adam, and a finite-difference oracle.

mod adam;
mod grad_check;
mod matrix;
mod mlp;

pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS};
pub use grad_check::{finite_diff_grad, finite_diff_scalar, max_relative_error};
pub use matrix::{matmul_nn, matmul_nt, matmul_tn, Matrix};
pub use mlp::{Activation, Dense, ForwardCache, Gradients, MlpParams};
