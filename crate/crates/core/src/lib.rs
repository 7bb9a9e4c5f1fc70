pub mod error;
pub mod panel;
pub mod probnet;

pub use error::{Error, Result};
pub mod baselines;
pub mod causal;
pub mod cli;
pub mod config;
pub mod metrics;
pub mod stats;
pub mod synth;
