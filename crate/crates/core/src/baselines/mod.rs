//! Comparison methods: a closed-form universal-inference e-process for binary
//! Markov alternatives and a conformal test martingale driven by a simple
//! jumper.

mod conformal;
mod universal;

pub use conformal::{conformal_pvalue, ConformalHistory, ConformalTester, Jumper, JUMPER_RATES};
pub use universal::{universal_log_evalue, UniversalTester};
