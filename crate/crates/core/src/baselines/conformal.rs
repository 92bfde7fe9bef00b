use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{domain, Result};
use crate::wealth::{DataKind, EValue, Round, Tester};

/// Jump rates used in the comparison figures.
pub const JUMPER_RATES: [f64; 3] = [0.1, 0.01, 0.001];

/// Randomised conformal p-value with the identity nonconformity score.
///
/// `(#{history > x} + theta * (#{history == x} + 1)) / (len + 1)`.
pub fn conformal_pvalue(history: &[f64], x: f64, theta: f64) -> f64 {
    let greater = history.iter().filter(|&&h| h > x).count();
    let ties = history.iter().filter(|&&h| h == x).count() + 1;
    (greater as f64 + theta * ties as f64) / (history.len() + 1) as f64
}

const BLOCK: usize = 512;

/// Sorted multiset of past observations supporting rank queries.
///
/// Stored as a list of sorted blocks so inserts stay cheap on long streams.
#[derive(Debug, Clone, Default)]
pub struct ConformalHistory {
    blocks: Vec<Vec<f64>>,
    len: usize,
}

impl ConformalHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of stored values `<= x` (or `< x` when `strict`).
    fn count_below(&self, x: f64, strict: bool) -> usize {
        let below = |v: &f64| if strict { *v < x } else { *v <= x };
        let mut total = 0;
        for block in &self.blocks {
            if below(block.last().expect("blocks are never empty")) {
                total += block.len();
            } else {
                return total + block.partition_point(below);
            }
        }
        total
    }

    pub fn count_greater(&self, x: f64) -> usize {
        self.len - self.count_below(x, false)
    }

    pub fn count_equal(&self, x: f64) -> usize {
        self.count_below(x, false) - self.count_below(x, true)
    }

    pub fn insert(&mut self, x: f64) {
        self.len += 1;
        let idx = self
            .blocks
            .iter()
            .position(|b| x <= *b.last().expect("blocks are never empty"))
            .unwrap_or(self.blocks.len().saturating_sub(1));
        if self.blocks.is_empty() {
            self.blocks.push(vec![x]);
            return;
        }
        let block = &mut self.blocks[idx];
        let at = block.partition_point(|v| *v <= x);
        block.insert(at, x);
        if block.len() > 2 * BLOCK {
            let tail = block.split_off(BLOCK);
            self.blocks.insert(idx + 1, tail);
        }
    }

    /// Same value as [`conformal_pvalue`] over the stored history.
    pub fn pvalue(&self, x: f64, theta: f64) -> f64 {
        let greater = self.count_greater(x) as f64;
        let ties = (self.count_equal(x) + 1) as f64;
        (greater + theta * ties) / (self.len + 1) as f64
    }
}

const EPSILONS: [f64; 3] = [-1.0, 0.0, 1.0];

/// Simple-jumper betting martingale on p-values.
///
/// Capital is split over the calibrators `f_e(p) = 1 + e (p - 1/2)`,
/// `e in {-1, 0, 1}`. Each step first moves a fraction `rate` of the total
/// capital uniformly across the three, then multiplies each share by its
/// calibrator. The shares are kept normalised with the total in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct Jumper {
    rate: f64,
    weights: [f64; 3],
    log_value: f64,
}

impl Jumper {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(domain(format!("jump rate {rate} must lie in (0, 1)")));
        }
        Ok(Self { rate, weights: [1.0 / 3.0; 3], log_value: 0.0 })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Consumes a p-value and returns the factor by which the martingale moved.
    pub fn step(&mut self, p: f64) -> Result<EValue> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(domain(format!("p-value {p} must lie in (0, 1]")));
        }
        let mut factor = 0.0;
        for (w, eps) in self.weights.iter_mut().zip(EPSILONS) {
            *w = (1.0 - self.rate) * *w + self.rate / 3.0;
            *w *= 1.0 + eps * (p - 0.5);
            factor += *w;
        }
        self.weights.iter_mut().for_each(|w| *w /= factor);
        self.log_value += factor.ln();
        EValue::new(factor)
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// Capital held by the calibrators `e = -1, 0, 1`.
    pub fn capital(&self) -> [f64; 3] {
        let v = self.value();
        self.weights.map(|w| w * v)
    }
}

/// Conformal test martingale over a stream of reals.
///
/// Tie-breaking draws come from the tester's own seeded generator.
#[derive(Debug, Clone)]
pub struct ConformalTester {
    history: ConformalHistory,
    jumper: Jumper,
    rng: ChaCha20Rng,
}

impl ConformalTester {
    pub fn new(rate: f64, rng: ChaCha20Rng) -> Result<Self> {
        Ok(Self { history: ConformalHistory::new(), jumper: Jumper::new(rate)?, rng })
    }

    pub fn seeded(rate: f64, seed: u64) -> Result<Self> {
        Self::new(rate, ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn jumper(&self) -> &Jumper {
        &self.jumper
    }

    /// Next p-value for `x`; `x` then joins the history.
    pub fn next_pvalue(&mut self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(domain(format!("observation {x} is not finite")));
        }
        // theta in (0, 1] keeps p strictly positive
        let theta = 1.0 - self.rng.random::<f64>();
        let p = self.history.pvalue(x, theta);
        self.history.insert(x);
        Ok(p)
    }
}

impl Tester for ConformalTester {
    fn data_kind(&self) -> DataKind {
        DataKind::Real
    }

    fn stride(&self) -> u64 {
        1
    }

    fn time(&self) -> u64 {
        self.history.len() as u64
    }

    fn observe(&mut self, x: f64) -> Result<Option<Round>> {
        let p = self.next_pvalue(x)?;
        Ok(Some(Round::Bet(self.jumper.step(p)?)))
    }
}
