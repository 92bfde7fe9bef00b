use statrs::function::gamma::ln_gamma;

use crate::binary::{Symbol, TransitionCounts};
use crate::error::{usage, Result};
use crate::wealth::{DataKind, Round, Tester};

/// `ln R_n`: a Krichevsky-Trofimov mixture over first-order Markov chains
/// divided by the maximised iid Bernoulli likelihood.
///
/// This is an e-process, not a supermartingale; it is thresholded at every
/// time without being a running product.
pub fn universal_log_evalue(counts: &TransitionCounts) -> Result<f64> {
    let n = counts.len();
    if n == 0 {
        return Err(usage("the universal e-process is undefined before the first observation"));
    }
    let (zero, one) = (Symbol::Zero, Symbol::One);
    let half_ln_gamma = ln_gamma(0.5);
    let mut log_r = 0.0;
    for next in Symbol::ALL {
        for prev in Symbol::ALL {
            log_r += ln_gamma(counts.pair(next, prev) as f64 + 0.5);
        }
    }
    log_r -= std::f64::consts::LN_2
        + 4.0 * half_ln_gamma
        + ln_gamma(counts.row_total(zero) as f64 + 1.0)
        + ln_gamma(counts.row_total(one) as f64 + 1.0);
    let n = n as f64;
    for s in [zero, one] {
        let k = counts.symbol(s) as f64;
        if k > 0.0 {
            log_r -= k * (k / n).ln();
        }
    }
    Ok(log_r)
}

/// Streaming wrapper reporting `ln R_t` after every observation.
#[derive(Debug, Clone, Default)]
pub struct UniversalTester {
    counts: TransitionCounts,
}

impl UniversalTester {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counts(&self) -> &TransitionCounts {
        &self.counts
    }
}

impl Tester for UniversalTester {
    fn data_kind(&self) -> DataKind {
        DataKind::Binary
    }

    fn stride(&self) -> u64 {
        1
    }

    fn time(&self) -> u64 {
        self.counts.len()
    }

    fn observe(&mut self, x: f64) -> Result<Option<Round>> {
        self.counts.ingest(Symbol::try_from(x)?);
        Ok(Some(Round::Level(universal_log_evalue(&self.counts)?)))
    }
}
