//! Constraint-rewriting variational autoencoder over variable-constraint
//! graphs.
//!
//! Training removes a random constraint and erases all solution features;
//! the decoder reconstructs the removed row and every erased value from the
//! corrupted graph and per-node latents. Sampling repeats remove/decode
//! steps with latents drawn from N(0, I), then rebuilds `(b, c)` from the
//! decoded tuple so every output is feasible and bounded.

mod model;
mod sample;
mod train;

pub use model::{DecoderOutput, EncoderOutput, HeadVars, ModelConfig, Vae};
pub use sample::{
    assemble_instance, instance_rng, rewrite_constraints, sample_instances, InferConfig, RETRY_CAP,
};
pub use train::{
    elbo_loss, elbo_on_tape, reconstruction_loss, train, LossParts, Targets, TrainConfig, TrainOutput,
    HUBER_DELTA,
};
