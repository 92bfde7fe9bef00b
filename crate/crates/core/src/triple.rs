//! Betting on three observations at a time.
//!
//! The bettor learns the unordered triple `{x_{3t+1}, x_{3t+2}, x_{3t+3}}` and
//! wagers on its order. Under exchangeability every ordering of the indices
//! is equally likely, so the bet is the alternative likelihood of the observed
//! order normalised over its permutations. Stopping is allowed at multiples
//! of three.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::binary::{Estimator, MarkovParams, Symbol, TransitionCounts, TransitionEstimate};
use crate::continuous::{stationary_window, Ar1Estimate, Ar1Fit, Ar1Params, VARIANCE_FLOOR, WARMUP};
use crate::error::{domain, usage, Result};
use crate::stats::{log_sum_exp, McEstimate, Welford};
use crate::wealth::{DataKind, EValue, Round, Tester};

/// The six orderings of three indices.
pub const INDEX_PERMUTATIONS: [[usize; 3]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Distinct reorderings of `xs`, in first-seen order.
pub fn distinct_permutations<T: Copy + PartialEq>(xs: [T; 3]) -> Vec<[T; 3]> {
    let mut out: Vec<[T; 3]> = Vec::with_capacity(6);
    for perm in INDEX_PERMUTATIONS {
        let p = [xs[perm[0]], xs[perm[1]], xs[perm[2]]];
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn chain_prob(p: impl Fn(Symbol, Symbol) -> f64, prev: Symbol, xs: [Symbol; 3]) -> f64 {
    p(xs[0], prev) * p(xs[1], xs[0]) * p(xs[2], xs[1])
}

/// `3 h(observed) / sum h(pi)` over the distinct permutations of a binary
/// triple, `h` being the chain probability starting from `prev`.
///
/// Returns 1 when all three symbols agree.
pub fn triple_score_binary(estimate: &TransitionEstimate, prev: Symbol, ordered: [Symbol; 3]) -> Result<EValue> {
    if ordered[0] == ordered[1] && ordered[1] == ordered[2] {
        return Ok(EValue::ONE);
    }
    estimate.check_interior()?;
    let p = |n, q| estimate.prob(n, q);
    let perms = distinct_permutations(ordered);
    let total: f64 = perms.iter().map(|&pi| chain_prob(p, prev, pi)).sum();
    EValue::new(perms.len() as f64 * chain_prob(p, prev, ordered) / total)
}

fn log_chain_density(est: &Ar1Estimate, prev: f64, xs: [f64; 3]) -> f64 {
    let q = (xs[0] - est.a * prev).powi(2) + (xs[1] - est.a * xs[0]).powi(2) + (xs[2] - est.a * xs[1]).powi(2);
    -q / (2.0 * est.sigma2.max(VARIANCE_FLOOR))
}

/// `ln` of `6 g(observed) / sum g(pi)` over all six index permutations,
/// duplicates included. Exactly 0 when `a == 0`.
pub fn log_triple_score_continuous(est: &Ar1Estimate, prev: f64, ordered: [f64; 3]) -> Result<f64> {
    for v in [est.a, est.sigma2, prev, ordered[0], ordered[1], ordered[2]] {
        if !v.is_finite() {
            return Err(domain(format!("non-finite input {v} to the triple score")));
        }
    }
    if est.a == 0.0 {
        return Ok(0.0);
    }
    let logs = INDEX_PERMUTATIONS.map(|perm| log_chain_density(est, prev, perm.map(|i| ordered[i])));
    let observed = logs[0];
    if logs.iter().all(|&l| l == observed) {
        return Ok(0.0);
    }
    Ok(6f64.ln() + observed - log_sum_exp(&logs))
}

pub fn triple_score_continuous(est: &Ar1Estimate, prev: f64, ordered: [f64; 3]) -> Result<EValue> {
    EValue::from_ln(log_triple_score_continuous(est, prev, ordered)?)
}

fn check_boundary(consumed: u64) -> Result<()> {
    if consumed % 3 != 0 {
        return Err(usage(format!("step_triple needs a triple boundary; {consumed} observations consumed")));
    }
    Ok(())
}

/// Streaming triple tester for binary data.
#[derive(Debug, Clone, Default)]
pub struct TripleBinaryTester {
    counts: TransitionCounts,
    estimator: Estimator,
    pending: Vec<Symbol>,
    rounds: u64,
}

impl TripleBinaryTester {
    pub fn new(estimator: Estimator) -> Self {
        Self { estimator, ..Self::default() }
    }

    pub fn counts(&self) -> &TransitionCounts {
        &self.counts
    }

    pub fn step_triple(&mut self, ordered: [Symbol; 3]) -> Result<EValue> {
        if !self.pending.is_empty() {
            return Err(usage("step_triple called while observations are buffered"));
        }
        check_boundary(self.counts.len())?;
        let constant = ordered[0] == ordered[1] && ordered[1] == ordered[2];
        let e = match self.counts.last() {
            Some(prev) if self.rounds > 0 && !constant => {
                let est = TransitionEstimate::from_counts(&self.counts, self.estimator)?;
                triple_score_binary(&est, prev, ordered)?
            }
            _ => EValue::ONE,
        };
        ordered.iter().for_each(|&x| self.counts.ingest(x));
        self.rounds += 1;
        Ok(e)
    }
}

impl Tester for TripleBinaryTester {
    fn data_kind(&self) -> DataKind {
        DataKind::Binary
    }

    fn stride(&self) -> u64 {
        3
    }

    fn time(&self) -> u64 {
        self.counts.len() + self.pending.len() as u64
    }

    fn observe(&mut self, x: f64) -> Result<Option<Round>> {
        let x = Symbol::try_from(x)?;
        if self.pending.len() < 2 {
            self.pending.push(x);
            return Ok(None);
        }
        let ordered = [self.pending[0], self.pending[1], x];
        let buffered = std::mem::take(&mut self.pending);
        match self.step_triple(ordered) {
            Ok(e) => Ok(Some(Round::Bet(e))),
            Err(err) => {
                self.pending = buffered;
                Err(err)
            }
        }
    }
}

/// Streaming triple tester for real-valued data.
///
/// Uses the same least-squares fit and warm-up as the pairwise tester.
#[derive(Debug, Clone, Default)]
pub struct TripleContinuousTester {
    fit: Ar1Fit,
    pending: Vec<f64>,
    rounds: u64,
}

impl TripleContinuousTester {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit(&self) -> &Ar1Fit {
        &self.fit
    }

    pub fn step_triple(&mut self, ordered: [f64; 3]) -> Result<EValue> {
        if !self.pending.is_empty() {
            return Err(usage("step_triple called while observations are buffered"));
        }
        check_boundary(self.fit.len())?;
        if ordered.iter().any(|x| !x.is_finite()) {
            return Err(domain(format!("non-finite triple {ordered:?}")));
        }
        let e = match (self.fit.estimate(), self.fit.last()) {
            (Some(est), Some(prev)) if self.rounds > 0 && self.fit.len() >= WARMUP => {
                triple_score_continuous(&est, prev, ordered)?
            }
            _ => EValue::ONE,
        };
        for x in ordered {
            self.fit.ingest(x)?;
        }
        self.rounds += 1;
        Ok(e)
    }
}

impl Tester for TripleContinuousTester {
    fn data_kind(&self) -> DataKind {
        DataKind::Real
    }

    fn stride(&self) -> u64 {
        3
    }

    fn time(&self) -> u64 {
        self.fit.len() + self.pending.len() as u64
    }

    fn observe(&mut self, x: f64) -> Result<Option<Round>> {
        if !x.is_finite() {
            return Err(domain(format!("observation {x} is not finite")));
        }
        if self.pending.len() < 2 {
            self.pending.push(x);
            return Ok(None);
        }
        let ordered = [self.pending[0], self.pending[1], x];
        let buffered = std::mem::take(&mut self.pending);
        match self.step_triple(ordered) {
            Ok(e) => Ok(Some(Round::Bet(e))),
            Err(err) => {
                self.pending = buffered;
                Err(err)
            }
        }
    }
}

/// Growth rate of the oracle triple bet under a first-order Markov chain.
///
/// `1/3 sum_i sum_{(j,k,l) not constant} ln(3 h / sum_pi h(pi)) pi_i h`, with
/// `h = p(j|i) p(k|j) p(l|k)`.
pub fn triple_growth_rate_markov(params: &MarkovParams) -> Result<f64> {
    let params = MarkovParams::new(params.p10, params.p11)?;
    let p = |n, q| params.prob(n, q);
    let mut r = 0.0;
    for i in Symbol::ALL {
        for code in 1..7u8 {
            let xs = [code >> 2 & 1, code >> 1 & 1, code & 1].map(|b| Symbol::try_from(b).expect("bit"));
            let perms = distinct_permutations(xs);
            let h = chain_prob(p, i, xs);
            let total: f64 = perms.iter().map(|&pi| chain_prob(p, i, pi)).sum();
            r += (perms.len() as f64 * h / total).ln() * params.stationary(i) * h;
        }
    }
    Ok(r / 3.0)
}

/// Monte-Carlo estimate of `1/3 E ln S*` for the oracle triple bet on
/// stationary `(X_3, .., X_6)`.
pub fn triple_growth_rate_ar1_mc(params: &Ar1Params, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 2 {
        return Err(usage(format!("need at least 2 Monte-Carlo samples, got {samples}")));
    }
    let est = params.estimate();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let mut w = [0.0; 4];
    for _ in 0..samples {
        stationary_window(params, &mut rng, &mut w)?;
        acc.push(log_triple_score_continuous(&est, w[0], [w[1], w[2], w[3]])? / 3.0);
    }
    Ok(acc.finish(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::markov_growth_rate;
    use crate::continuous::{ar1_growth_rate_mc, Ar1Init};
    use proptest::prelude::*;
    use Symbol::{One, Zero};

    #[test]
    fn binary_examples() {
        let est = TransitionEstimate::from_rows(0.9, 0.1);
        assert_eq!(triple_score_binary(&est, Zero, [One, One, One]).unwrap(), EValue::ONE);
        let iid = TransitionEstimate::from_rows(0.3, 0.3);
        assert_eq!(triple_score_binary(&iid, One, [One, Zero, One]).unwrap().value(), 1.0);

        let p = |n, q| est.prob(n, q);
        let h = |xs: [Symbol; 3]| p(xs[0], Zero) * p(xs[1], xs[0]) * p(xs[2], xs[1]);
        let want = 3.0 * h([One, Zero, One]) / (h([One, Zero, One]) + h([One, One, Zero]) + h([Zero, One, One]));
        let got = triple_score_binary(&est, Zero, [One, Zero, One]).unwrap().value();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn distinct_permutation_counts() {
        assert_eq!(distinct_permutations([1, 0, 1]).len(), 3);
        assert_eq!(distinct_permutations([1, 2, 3]).len(), 6);
        assert_eq!(distinct_permutations([4, 4, 4]).len(), 1);
    }

    #[test]
    fn continuous_examples() {
        let zero = Ar1Estimate { a: 0.0, sigma2: 2.0 };
        assert_eq!(triple_score_continuous(&zero, 0.1, [3.0, -1.0, 0.5]).unwrap(), EValue::ONE);

        let est = Ar1Estimate { a: 0.8, sigma2: 1.0 };
        let g = |w: f64, xs: [f64; 3]| {
            let f = |prev: f64, x: f64| (-(x - 0.8 * prev).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            f(w, xs[0]) * f(xs[0], xs[1]) * f(xs[1], xs[2])
        };
        let ordered = [1.0, 0.6, 0.2];
        let total: f64 = INDEX_PERMUTATIONS.iter().map(|p| g(0.5, p.map(|i| ordered[i]))).sum();
        let want = 6.0 * g(0.5, ordered) / total;
        let got = triple_score_continuous(&est, 0.5, ordered).unwrap().value();
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn tester_warmup_and_first_round() {
        let mut t = TripleBinaryTester::default();
        assert_eq!(t.step_triple([Zero, One, Zero]).unwrap(), EValue::ONE);
        assert_ne!(t.step_triple([One, Zero, Zero]).unwrap(), EValue::ONE);

        let mut c = TripleContinuousTester::new();
        assert_eq!(c.step_triple([0.5, -0.2, 1.0]).unwrap(), EValue::ONE);
        assert_eq!(c.step_triple([0.1, 0.9, -0.4]).unwrap(), EValue::ONE);
        assert_ne!(c.step_triple([0.7, -0.3, 0.2]).unwrap(), EValue::ONE);
        assert!(c.observe(1.0).unwrap().is_none());
        assert!(c.observe(2.0).unwrap().is_none());
        assert!(c.observe(3.0).unwrap().is_some());
        assert_eq!(c.time(), 12);
    }

    #[test]
    fn markov_rates() {
        for p in [0.1, 0.5, 0.8] {
            let r = triple_growth_rate_markov(&MarkovParams { p10: p, p11: p }).unwrap();
            assert!(r.abs() < 1e-12);
        }
        let m = MarkovParams::new(0.9, 0.1).unwrap();
        let tri = triple_growth_rate_markov(&m).unwrap();
        assert!(tri > markov_growth_rate(&m).unwrap());
        assert!(triple_growth_rate_markov(&MarkovParams { p10: 1.0, p11: 0.5 }).is_err());
    }

    #[test]
    fn ar1_rates() {
        let null = Ar1Params::new(0.0, 1.0, Ar1Init::Stationary).unwrap();
        assert_eq!(triple_growth_rate_ar1_mc(&null, 1000, 1).unwrap().mean, 0.0);
        let p = Ar1Params::new(0.8, 1.0, Ar1Init::Stationary).unwrap();
        let tri = triple_growth_rate_ar1_mc(&p, 20_000, 1).unwrap();
        let pair = ar1_growth_rate_mc(&p, 20_000, 1).unwrap();
        assert!(tri.mean > 3.0 * tri.std_error);
        assert!(tri.mean - pair.mean > 3.0 * tri.std_error.hypot(pair.std_error));
    }

    fn arb_symbols() -> impl Strategy<Value = [Symbol; 3]> {
        (0u8..8).prop_map(|c| [c >> 2 & 1, c >> 1 & 1, c & 1].map(|b| Symbol::try_from(b).unwrap()))
    }

    proptest! {
        #[test]
        fn binary_fair_game(p10 in 0.01f64..0.99, p11 in 0.01f64..0.99, xs in arb_symbols(), prev in 0u8..2) {
            let est = TransitionEstimate::from_rows(p10, p11);
            let prev = Symbol::try_from(prev).unwrap();
            let perms = distinct_permutations(xs);
            let total: f64 = perms.iter().map(|&pi| triple_score_binary(&est, prev, pi).unwrap().value()).sum();
            prop_assert!((total - perms.len() as f64).abs() < 1e-12);
        }

        #[test]
        fn continuous_fair_game(a in -0.99f64..0.99, s2 in 0.05f64..5.0, w in -3.0f64..3.0,
                                x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0, dup in proptest::bool::ANY) {
            let est = Ar1Estimate { a, sigma2: s2 };
            let ordered = if dup { [x, y, x] } else { [x, y, z] };
            let total: f64 = INDEX_PERMUTATIONS
                .iter()
                .map(|p| triple_score_continuous(&est, w, p.map(|i| ordered[i])).unwrap().value())
                .sum();
            prop_assert!((total - 6.0).abs() < 1e-10);
        }
    }
}
