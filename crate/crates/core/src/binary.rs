//! Pairwise betting on binary sequences.
//!
//! At every round the bettor learns the unordered pair `{x_t, x_{t+1}}`. An
//! equal pair carries no information and is not bet on. For an unequal pair
//! the null probability of either order is 1/2, and the bettor stakes the
//! conditional likelihood ratio of a first-order Markov chain whose transition
//! probabilities are estimated from `x_1..x_{t-1}`.
//!
//! Conventions:
//! - `p(j | i)` is the probability of symbol `j` following symbol `i`;
//!   [`MarkovParams`] stores `p10 = p(1 | 0)` and `p11 = p(1 | 1)`.
//! - The first pair is never bet on.
//! - The default estimator is add-one smoothing, which is always interior;
//!   the raw MLE is available but fails loudly when it hits 0 or 1.

use serde::{Deserialize, Serialize};

use crate::error::{domain, numeric, usage, Result};
use crate::wealth::{DataKind, EValue, Round, Tester};

/// A binary observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
}

impl Symbol {
    pub const ALL: [Symbol; 2] = [Symbol::Zero, Symbol::One];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The other symbol.
    pub fn flip(self) -> Symbol {
        match self {
            Symbol::Zero => Symbol::One,
            Symbol::One => Symbol::Zero,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.index() as f64
    }
}

impl TryFrom<f64> for Symbol {
    type Error = crate::Error;

    fn try_from(x: f64) -> Result<Self> {
        if x == 0.0 {
            Ok(Symbol::Zero)
        } else if x == 1.0 {
            Ok(Symbol::One)
        } else {
            Err(domain(format!("{x} is not a binary symbol; use a real-valued tester")))
        }
    }
}

impl TryFrom<u8> for Symbol {
    type Error = crate::Error;

    fn try_from(x: u8) -> Result<Self> {
        Symbol::try_from(f64::from(x))
    }
}

/// Streaming transition counts.
///
/// `pair(j, i)` is the number of times `j` immediately followed `i`;
/// `triple(k, j, i)` the number of times `k` followed `j` following `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pair: [[u64; 2]; 2],
    triple: [[[u64; 2]; 2]; 2],
    symbols: [u64; 2],
    len: u64,
    last: Option<Symbol>,
    before_last: Option<Symbol>,
}

impl TransitionCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols(xs: &[Symbol]) -> Self {
        let mut c = Self::new();
        xs.iter().for_each(|&x| c.ingest(x));
        c
    }

    pub fn ingest(&mut self, x: Symbol) {
        if let Some(prev) = self.last {
            self.pair[x.index()][prev.index()] += 1;
            if let Some(prev2) = self.before_last {
                self.triple[x.index()][prev.index()][prev2.index()] += 1;
            }
        }
        self.symbols[x.index()] += 1;
        self.len += 1;
        self.before_last = self.last;
        self.last = Some(x);
    }

    /// `n_{next|prev}`.
    pub fn pair(&self, next: Symbol, prev: Symbol) -> u64 {
        self.pair[next.index()][prev.index()]
    }

    /// Number of `k` following `j` following `i`.
    pub fn triple(&self, k: Symbol, j: Symbol, i: Symbol) -> u64 {
        self.triple[k.index()][j.index()][i.index()]
    }

    /// Transitions out of `prev`.
    pub fn row_total(&self, prev: Symbol) -> u64 {
        self.pair[0][prev.index()] + self.pair[1][prev.index()]
    }

    pub fn symbol(&self, s: Symbol) -> u64 {
        self.symbols[s.index()]
    }

    /// Observations consumed.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn last(&self) -> Option<Symbol> {
        self.last
    }
}

/// How transition probabilities are estimated from counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Estimator {
    /// `(n_{j|i} + 1) / (n_{0|i} + n_{1|i} + 2)`: the MAP estimate under a
    /// uniform prior. Always strictly inside (0, 1).
    #[default]
    Smoothed,
    /// `n_{j|i} / (n_{0|i} + n_{1|i})`.
    Mle,
}

/// Estimated transition matrix, `p[j][i] = p(j | i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionEstimate {
    p: [[f64; 2]; 2],
    kind: Estimator,
}

impl TransitionEstimate {
    pub fn from_counts(counts: &TransitionCounts, kind: Estimator) -> Result<Self> {
        let mut p = [[0.0; 2]; 2];
        for i in Symbol::ALL {
            let total = counts.row_total(i);
            for j in Symbol::ALL {
                let n = counts.pair(j, i);
                p[j.index()][i.index()] = match kind {
                    Estimator::Smoothed => (n + 1) as f64 / (total + 2) as f64,
                    Estimator::Mle => {
                        if total == 0 {
                            return Err(numeric(format!(
                                "MLE of p(.|{}) is undefined before any transition out of {} \
                                 has been seen; use the smoothed estimator",
                                i.index(),
                                i.index()
                            )));
                        }
                        n as f64 / total as f64
                    }
                };
            }
        }
        Ok(Self { p, kind })
    }

    /// The exact transition matrix of a chain (oracle bets).
    pub fn from_markov(params: &MarkovParams) -> Self {
        Self::from_rows(params.p10, params.p11)
    }

    /// Transition matrix with `p(1|0) = p10` and `p(1|1) = p11`.
    ///
    /// Treated as the smoothed kind; the probabilities are not validated.
    pub fn from_rows(p10: f64, p11: f64) -> Self {
        Self { p: [[1.0 - p10, 1.0 - p11], [p10, p11]], kind: Estimator::Smoothed }
    }

    /// `p(next | prev)`.
    pub fn prob(&self, next: Symbol, prev: Symbol) -> f64 {
        self.p[next.index()][prev.index()]
    }

    pub fn kind(&self) -> Estimator {
        self.kind
    }

    pub(crate) fn check_interior(&self) -> Result<()> {
        let interior = self.p.iter().flatten().all(|&q| q > 0.0 && q < 1.0);
        if interior {
            return Ok(());
        }
        Err(numeric(format!(
            "transition estimate {:?} has a component at 0 or 1; a bet on it could zero the \
             wealth. Use the smoothed estimator",
            self.p
        )))
    }
}

/// Betting score for the observed order of a pair.
///
/// Returns 1 for an equal pair. Otherwise the factor is
/// `2 L / (L + L_swap)` with `L = p(x_t | x_prev) p(x_{t+1} | x_t)`, which
/// lies in (0, 2) and sums to 2 with the score of the swapped order.
pub fn pair_score(estimate: &TransitionEstimate, x_prev: Symbol, pair: (Symbol, Symbol)) -> Result<EValue> {
    let (x_t, x_t1) = pair;
    if x_t == x_t1 {
        return Ok(EValue::ONE);
    }
    estimate.check_interior()?;
    let observed = estimate.prob(x_t, x_prev) * estimate.prob(x_t1, x_t);
    let swapped = estimate.prob(x_t1, x_prev) * estimate.prob(x_t, x_t1);
    EValue::new(2.0 * observed / (observed + swapped))
}

/// Where the first betting pair starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Pairing {
    /// Pairs `(x_1, x_2), (x_3, x_4), ...`; stopping at even times.
    #[default]
    Odd,
    /// `x_1` is observed alone, then pairs `(x_2, x_3), (x_4, x_5), ...`;
    /// stopping at odd times `>= 3`.
    Even,
}

impl Pairing {
    /// Number of observations seen before the first pair.
    pub fn lead(self) -> u64 {
        match self {
            Pairing::Odd => 0,
            Pairing::Even => 1,
        }
    }
}

/// Streaming pairwise tester for binary data.
#[derive(Debug, Clone, Default)]
pub struct PairwiseBinaryTester {
    counts: TransitionCounts,
    estimator: Estimator,
    pairing: Pairing,
    pending: Option<Symbol>,
    rounds: u64,
}

impl PairwiseBinaryTester {
    pub fn new(estimator: Estimator, pairing: Pairing) -> Self {
        Self { estimator, pairing, ..Self::default() }
    }

    pub fn counts(&self) -> &TransitionCounts {
        &self.counts
    }

    /// Rounds played so far, including no-bet rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Bets on the pair `(x_t, x_t1)`, then reveals it.
    ///
    /// The score uses only the observations consumed before the call. On
    /// error the state is left unchanged.
    pub fn step_pair(&mut self, x_t: Symbol, x_t1: Symbol) -> Result<EValue> {
        if self.pending.is_some() {
            return Err(usage("step_pair called while a single observation is buffered"));
        }
        let consumed = self.counts.len();
        if consumed < self.pairing.lead() || (consumed - self.pairing.lead()) % 2 != 0 {
            return Err(usage(format!(
                "step_pair needs a pair boundary; {consumed} observations consumed under {:?} pairing",
                self.pairing
            )));
        }
        let e = match self.counts.last() {
            Some(prev) if self.rounds > 0 && x_t != x_t1 => {
                let estimate = TransitionEstimate::from_counts(&self.counts, self.estimator)?;
                pair_score(&estimate, prev, (x_t, x_t1))?
            }
            _ => EValue::ONE,
        };
        self.counts.ingest(x_t);
        self.counts.ingest(x_t1);
        self.rounds += 1;
        Ok(e)
    }
}

impl Tester for PairwiseBinaryTester {
    fn data_kind(&self) -> DataKind {
        DataKind::Binary
    }

    fn stride(&self) -> u64 {
        2
    }

    fn phase(&self) -> u64 {
        self.pairing.lead()
    }

    fn time(&self) -> u64 {
        self.counts.len() + u64::from(self.pending.is_some())
    }

    fn observe(&mut self, x: f64) -> Result<Option<Round>> {
        let x = Symbol::try_from(x)?;
        if self.counts.len() < self.pairing.lead() {
            self.counts.ingest(x);
            return Ok(None);
        }
        match self.pending.take() {
            None => {
                self.pending = Some(x);
                Ok(None)
            }
            Some(first) => match self.step_pair(first, x) {
                Ok(e) => Ok(Some(Round::Bet(e))),
                Err(err) => {
                    self.pending = Some(first);
                    Err(err)
                }
            },
        }
    }
}

/// Parameters of a two-state Markov chain with both transition
/// probabilities strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovParams {
    /// `p(1 | 0)`.
    pub p10: f64,
    /// `p(1 | 1)`.
    pub p11: f64,
}

impl MarkovParams {
    pub fn new(p10: f64, p11: f64) -> Result<Self> {
        for (name, v) in [("p10", p10), ("p11", p11)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(domain(format!("{name} = {v} must lie strictly inside (0, 1)")));
            }
        }
        Ok(Self { p10, p11 })
    }

    /// `p(next | prev)`.
    pub fn prob(&self, next: Symbol, prev: Symbol) -> f64 {
        let p1 = match prev {
            Symbol::Zero => self.p10,
            Symbol::One => self.p11,
        };
        match next {
            Symbol::One => p1,
            Symbol::Zero => 1.0 - p1,
        }
    }

    /// Stationary probability of `s`: `p(s | s') / (p(s | s') + p(s' | s))`.
    pub fn stationary(&self, s: Symbol) -> f64 {
        let into = self.prob(s, s.flip());
        let out = self.prob(s.flip(), s);
        into / (into + out)
    }
}

/// `ln` of the oracle pair score for the configuration `(i, j, j^c)`.
fn log_pair_ratio(p: impl Fn(Symbol, Symbol) -> f64, i: Symbol, j: Symbol) -> f64 {
    let jc = j.flip();
    let observed = p(j, i) * p(jc, j);
    let swapped = p(jc, i) * p(j, jc);
    (2.0 * observed / (observed + swapped)).ln()
}

/// Almost-sure growth rate of `ln M_t / t` under a first-order Markov chain.
///
/// `r = 1/2 sum_{i,j} ln(2 p(j|i) p(j^c|j) / (p(j|i) p(j^c|j) + p(j^c|i) p(j|j^c)))
///      * pi_i p(j|i) p(j^c|j)`.
/// Zero exactly when `p10 == p11`, positive otherwise.
pub fn markov_growth_rate(params: &MarkovParams) -> Result<f64> {
    let params = MarkovParams::new(params.p10, params.p11)?;
    let p = |next, prev| params.prob(next, prev);
    let mut r = 0.0;
    for i in Symbol::ALL {
        for j in Symbol::ALL {
            let weight = params.stationary(i) * p(j, i) * p(j.flip(), j);
            r += log_pair_ratio(p, i, j) * weight;
        }
    }
    Ok(0.5 * r)
}

/// Long-run frequencies of a binary sequence.
///
/// `alpha`, `beta`, `gamma` are the limiting rates of the transitions
/// `1 -> 1`, `0 -> 0`, and `0 -> 1` (equivalently `1 -> 0`).
/// `triples[i][j]` is the limiting rate of the pattern `i, j, j^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralLimits {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub triples: [[f64; 2]; 2],
}

impl GeneralLimits {
    /// The limits a stationary first-order chain induces.
    pub fn from_markov(params: &MarkovParams) -> Self {
        let p = |next, prev| params.prob(next, prev);
        let pi = |s| params.stationary(s);
        let (zero, one) = (Symbol::Zero, Symbol::One);
        let mut triples = [[0.0; 2]; 2];
        for i in Symbol::ALL {
            for j in Symbol::ALL {
                triples[i.index()][j.index()] = pi(i) * p(j, i) * p(j.flip(), j);
            }
        }
        Self {
            alpha: pi(one) * p(one, one),
            beta: pi(zero) * p(zero, zero),
            gamma: pi(zero) * p(one, zero),
            triples,
        }
    }

    /// Rate of the pattern `i, j, j^c`.
    pub fn triple(&self, i: Symbol, j: Symbol) -> f64 {
        self.triples[i.index()][j.index()]
    }

    /// Implied transition probabilities as `p[j][i] = p(j | i)`.
    pub fn transitions(&self) -> Result<TransitionEstimate> {
        let values = [self.alpha, self.beta, self.gamma]
            .into_iter()
            .chain(self.triples.iter().flatten().copied());
        if values.into_iter().any(|v| !(v.is_finite() && v >= 0.0)) {
            return Err(domain(format!("limits must be finite and nonnegative: {self:?}")));
        }
        let from_one = self.alpha + self.gamma;
        let from_zero = self.beta + self.gamma;
        if !(from_one > 0.0 && from_zero > 0.0) {
            return Err(domain("limits leave a transition row undefined"));
        }
        let estimate = TransitionEstimate::from_rows(self.gamma / from_zero, self.alpha / from_one);
        estimate
            .check_interior()
            .map_err(|_| domain(format!("limits imply a transition probability at 0 or 1: {self:?}")))?;
        Ok(estimate)
    }
}

/// Growth rate `r'` of the pairwise tester on any binary sequence whose
/// long-run frequencies are `limits`.
///
/// `r' = 1/2 sum_{i,j} ln(...) * p_{i,j,j^c}` with the same log ratio as
/// [`markov_growth_rate`] evaluated at the implied transitions. It reduces to
/// the Markov rate when the limits come from a first-order chain.
pub fn general_growth_rate(limits: &GeneralLimits) -> Result<f64> {
    let est = limits.transitions()?;
    let p = |next, prev| est.prob(next, prev);
    let mut r = 0.0;
    for i in Symbol::ALL {
        for j in Symbol::ALL {
            r += log_pair_ratio(p, i, j) * limits.triple(i, j);
        }
    }
    Ok(0.5 * r)
}

/// Sign conditions accompanying [`general_growth_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityConditions {
    /// `p_{1,1,0} / (p_{1,1,0} + p_{0,1,0})`.
    pub a: f64,
    /// `p_{1,0,1} / (p_{1,0,1} + p_{0,0,1})`.
    pub b: f64,
    /// `(2 p(0|1) - 1)(a + p(0|1) - 1) >= 0`.
    pub first: bool,
    /// `(2 p(1|0) - 1)(b + p(1|0) - 1) >= 0`.
    pub second: bool,
    /// `p(1|0) != p(1|1)` beyond [`SIGN_TOLERANCE`].
    pub distinct: bool,
}

/// Products within this distance of zero count as satisfying a sign
/// condition. First-order chains put the first condition exactly at 0.
pub const SIGN_TOLERANCE: f64 = 1e-12;

pub fn check_positivity_conditions(limits: &GeneralLimits) -> Result<PositivityConditions> {
    let est = limits.transitions()?;
    let (zero, one) = (Symbol::Zero, Symbol::One);
    let a_den = limits.triple(one, one) + limits.triple(zero, one);
    let b_den = limits.triple(one, zero) + limits.triple(zero, zero);
    if !(a_den > 0.0) || !(b_den > 0.0) {
        return Err(domain("a or b is undefined: zero denominator in the triple limits"));
    }
    let a = limits.triple(one, one) / a_den;
    let b = limits.triple(one, zero) / b_den;
    let p01 = est.prob(zero, one);
    let p10 = est.prob(one, zero);
    let p11 = est.prob(one, one);
    Ok(PositivityConditions {
        a,
        b,
        first: (2.0 * p01 - 1.0) * (a + p01 - 1.0) >= -SIGN_TOLERANCE,
        second: (2.0 * p10 - 1.0) * (b + p10 - 1.0) >= -SIGN_TOLERANCE,
        distinct: (p10 - p11).abs() > SIGN_TOLERANCE,
    })
}
