pub mod agent;
pub mod envs;
pub mod error;
pub mod harness;
pub mod nn;
pub mod plot;
pub mod replay;

pub use error::{Error, Result};
