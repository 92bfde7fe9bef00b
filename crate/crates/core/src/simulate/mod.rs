//! Data generators and the replicated-experiment harness.
//!
//! Seeding: replication `r` of an experiment with master seed `s` draws its
//! data from `ChaCha20Rng::seed_from_u64(s)` on stream `2r`, and any
//! randomness inside the method (conformal tie-breaking) from stream `2r + 1`.
//! Different methods run under the same master seed therefore see identical
//! data, and results do not depend on how replications are scheduled.

mod experiment;
mod generate;

pub use experiment::{
    data_rng, estimate_type1, grid_indices, method_rng, run_comparison, run_experiment, ExperimentConfig, ExperimentResult, Method,
    Replication, DEFAULT_GRID_POINTS,
};
pub use generate::{generate, generate_with, Generator, GeneratorSpec};
