//! Feasible-bounded MILP instance generation.

pub mod analytics;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod instance;
pub mod nn;
pub mod pipeline;
pub mod solver;
pub mod vae;

pub use error::{Error, Result};
