//! Sequential, anytime-valid tests of exchangeability built from betting games.
//!
//! Observations are revealed in small unordered batches (pairs, or triples);
//! the bettor wagers on the order in which the batch was observed. Under
//! exchangeability every order is equally likely given the batch, so the
//! bettor's wealth is a test martingale in the coarsened filtration and the
//! first time it reaches `1/alpha` gives a level-`alpha` sequential test.
//! Optional stopping is only valid at batch boundaries.
//!
//! Modules:
//!
//! - [`wealth`]: e-values, log-space wealth trajectories, the stopping rule and
//!   the [`Tester`] interface shared by every method.
//! - [`binary`]: pairwise betting on binary sequences with plug-in Markov
//!   transition estimates, plus closed-form growth rates.
//! - [`continuous`]: pairwise betting on real sequences with a plug-in AR(1)
//!   model, plus Monte-Carlo growth rates.
//! - [`triple`]: the three-at-a-time variants of both.
//! - [`baselines`]: the universal-inference e-process and the conformal
//!   simple-jumper martingale.
//! - [`simulate`]: data generators and the seeded, parallel experiment harness.

pub mod baselines;
pub mod binary;
pub mod continuous;
mod error;
pub mod simulate;
pub mod stats;
pub mod triple;
pub mod wealth;

pub use error::{Error, Result};
pub use wealth::{stop_rule, DataKind, EValue, Round, StoppingDecision, Tester, WealthEntry, WealthTrajectory};
