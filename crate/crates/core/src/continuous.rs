//! Pairwise betting on real-valued sequences against an AR(1) alternative.
//!
//! The bet on the pair `(x_t, x_{t+1})` is the conditional likelihood ratio
//! of the observed order against the swapped one, under an AR(1) model fitted
//! by least squares to `x_1..x_{t-1}`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::binary::Pairing;
use crate::error::{domain, usage, Result};
use crate::stats::{softplus, McEstimate, Welford};
use crate::wealth::{DataKind, EValue, Round, Tester};

/// Smallest residual variance used in a bet.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Observations the fit must hold before the first real bet.
pub const WARMUP: u64 = 4;

/// AR(1) coefficient and innovation variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Estimate {
    pub a: f64,
    pub sigma2: f64,
}

/// Streaming least-squares fit of `X_i = a X_{i-1} + noise` (no intercept).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ar1Fit {
    /// `sum_{i<n} X_i^2`.
    sum_lag: f64,
    /// `sum_{i>=2} X_i X_{i-1}`.
    sum_cross: f64,
    /// `sum_{i>=2} X_i^2`.
    sum_lead: f64,
    last: Option<f64>,
    n: u64,
}

impl Ar1Fit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Result<Self> {
        let mut fit = Self::new();
        for &x in xs {
            fit.ingest(x)?;
        }
        Ok(fit)
    }

    pub fn ingest(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(domain(format!("observation {x} is not finite")));
        }
        if let Some(prev) = self.last {
            self.sum_lag += prev * prev;
            self.sum_cross += x * prev;
            self.sum_lead += x * x;
        }
        self.last = Some(x);
        self.n += 1;
        Ok(())
    }

    /// Observations consumed.
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn last(&self) -> Option<f64> {
        self.last
    }

    /// `sum X_i X_{i-1} / sum X_{i-1}^2`; `None` while the denominator is 0.
    pub fn a_hat(&self) -> Option<f64> {
        (self.n >= 2 && self.sum_lag > 0.0).then(|| self.sum_cross / self.sum_lag)
    }

    /// Residual sum of squares over `n - 1`, unfloored.
    pub fn sigma2_hat(&self) -> Option<f64> {
        let a = self.a_hat()?;
        let rss = self.sum_lead - a * self.sum_cross;
        Some(rss.max(0.0) / (self.n - 1) as f64)
    }

    /// The fit with the variance floored at [`VARIANCE_FLOOR`].
    pub fn estimate(&self) -> Option<Ar1Estimate> {
        Some(Ar1Estimate { a: self.a_hat()?, sigma2: self.sigma2_hat()?.max(VARIANCE_FLOOR) })
    }
}

/// `ln(2 f(x, y, z) / (f(x, y, z) + f(x, z, y)))` for the AR(1) density `f`
/// of `(y, z)` given `x`.
///
/// The result lies in `(-inf, ln 2)` and is exactly 0 when `a == 0` or
/// `y == z`.
pub fn log_pair_likelihood_ratio(est: &Ar1Estimate, x_prev: f64, x_t: f64, x_t1: f64) -> Result<f64> {
    for v in [est.a, est.sigma2, x_prev, x_t, x_t1] {
        if !v.is_finite() {
            return Err(domain(format!("non-finite input {v} to the pair likelihood ratio")));
        }
    }
    if est.a == 0.0 || x_t == x_t1 {
        return Ok(0.0);
    }
    let sigma2 = est.sigma2.max(VARIANCE_FLOOR);
    let q = |x: f64, y: f64, z: f64| (y - est.a * x).powi(2) + (z - est.a * y).powi(2);
    let lf_observed = -q(x_prev, x_t, x_t1) / (2.0 * sigma2);
    let lf_swapped = -q(x_prev, x_t1, x_t) / (2.0 * sigma2);
    if lf_observed == lf_swapped {
        return Ok(0.0);
    }
    Ok(std::f64::consts::LN_2 - softplus(lf_swapped - lf_observed))
}

/// Distribution of the first observation of a simulated AR(1) path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Ar1Init {
    /// `N(0, sigma2 / (1 - a^2))`.
    Stationary,
    /// `N(0, 1)`.
    #[default]
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Params {
    pub a: f64,
    pub sigma2: f64,
    pub init: Ar1Init,
}

impl Ar1Params {
    pub fn new(a: f64, sigma2: f64, init: Ar1Init) -> Result<Self> {
        if !a.is_finite() {
            return Err(domain(format!("AR coefficient {a} is not finite")));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(domain(format!("innovation variance {sigma2} must be positive")));
        }
        if init == Ar1Init::Stationary && a.abs() >= 1.0 {
            return Err(domain(format!("stationary AR(1) needs |a| < 1, got {a}")));
        }
        Ok(Self { a, sigma2, init })
    }

    /// `sigma2 / (1 - a^2)`.
    pub fn stationary_variance(&self) -> Result<f64> {
        if self.a.abs() >= 1.0 {
            return Err(domain(format!("no stationary law for |a| = {} >= 1", self.a.abs())));
        }
        Ok(self.sigma2 / (1.0 - self.a * self.a))
    }

    pub fn estimate(&self) -> Ar1Estimate {
        Ar1Estimate { a: self.a, sigma2: self.sigma2 }
    }
}

/// Streaming pairwise tester for real-valued data.
#[derive(Debug, Clone, Default)]
pub struct ContinuousPairwiseTester {
    fit: Ar1Fit,
    pairing: Pairing,
    pending: Option<f64>,
    rounds: u64,
}

impl ContinuousPairwiseTester {
    pub fn new(pairing: Pairing) -> Self {
        Self { pairing, ..Self::default() }
    }

    pub fn fit(&self) -> &Ar1Fit {
        &self.fit
    }

    /// Bets on `(x_t, x_t1)` with the fit over earlier observations, then
    /// ingests both.
    pub fn step_pair(&mut self, x_t: f64, x_t1: f64) -> Result<EValue> {
        if self.pending.is_some() {
            return Err(usage("step_pair called while a single observation is buffered"));
        }
        let consumed = self.fit.len();
        let lead = self.pairing.lead();
        if consumed < lead || (consumed - lead) % 2 != 0 {
            return Err(usage(format!(
                "step_pair needs a pair boundary; {consumed} observations consumed under {:?} pairing",
                self.pairing
            )));
        }
        if !(x_t.is_finite() && x_t1.is_finite()) {
            return Err(domain(format!("non-finite pair ({x_t}, {x_t1})")));
        }
        let e = match (self.fit.estimate(), self.fit.last()) {
            (Some(est), Some(prev)) if self.rounds > 0 && consumed >= WARMUP => {
                EValue::from_ln(log_pair_likelihood_ratio(&est, prev, x_t, x_t1)?)?
            }
            _ => EValue::ONE,
        };
        self.fit.ingest(x_t)?;
        self.fit.ingest(x_t1)?;
        self.rounds += 1;
        Ok(e)
    }
}

impl Tester for ContinuousPairwiseTester {
    fn data_kind(&self) -> DataKind {
        DataKind::Real
    }

    fn stride(&self) -> u64 {
        2
    }

    fn phase(&self) -> u64 {
        self.pairing.lead()
    }

    fn time(&self) -> u64 {
        self.fit.len() + u64::from(self.pending.is_some())
    }

    fn observe(&mut self, x: f64) -> Result<Option<Round>> {
        if !x.is_finite() {
            return Err(domain(format!("observation {x} is not finite")));
        }
        if self.fit.len() < self.pairing.lead() {
            self.fit.ingest(x)?;
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

/// Draws `len` consecutive values of the stationary process.
pub(crate) fn stationary_window<R: rand::Rng + ?Sized>(params: &Ar1Params, rng: &mut R, out: &mut [f64]) -> Result<()> {
    let sd = params.stationary_variance()?.sqrt();
    let noise = params.sigma2.sqrt();
    let mut x = sd * Distribution::<f64>::sample(&StandardNormal, rng);
    for slot in out.iter_mut() {
        *slot = x;
        let z: f64 = Distribution::<f64>::sample(&StandardNormal, rng);
        x = params.a * x + noise * z;
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(usage(format!("need at least 2 Monte-Carlo samples, got {samples}")));
    }
    Ok(())
}

/// Monte-Carlo estimate of `r* = 1/2 E ln S` where `S` is the oracle pair
/// score on stationary `(X_2, X_3, X_4)`.
///
/// The initial-value kind of `params` is ignored; draws are stationary.
pub fn ar1_growth_rate_mc(params: &Ar1Params, samples: usize, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    let est = params.estimate();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let mut w = [0.0; 3];
    for _ in 0..samples {
        stationary_window(params, &mut rng, &mut w)?;
        acc.push(0.5 * log_pair_likelihood_ratio(&est, w[0], w[1], w[2])?);
    }
    Ok(acc.finish(seed))
}

/// Monte-Carlo estimate of `E[1 / S]` for the oracle pair score on stationary
/// AR(1) draws. Values at or below 1 support the non-Gaussian growth
/// guarantee's sufficient condition.
pub fn inverse_evalue_check(params: &Ar1Params, samples: usize, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    let est = params.estimate();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let mut w = [0.0; 3];
    for _ in 0..samples {
        stationary_window(params, &mut rng, &mut w)?;
        acc.push((-log_pair_likelihood_ratio(&est, w[0], w[1], w[2])?).exp());
    }
    Ok(acc.finish(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct_ratio(a: f64, s2: f64, x: f64, y: f64, z: f64) -> f64 {
        let f = |x: f64, y: f64, z: f64| {
            let c = 1.0 / (2.0 * std::f64::consts::PI * s2);
            c * (-((y - a * x).powi(2) + (z - a * y).powi(2)) / (2.0 * s2)).exp()
        };
        2.0 * f(x, y, z) / (f(x, y, z) + f(x, z, y))
    }

    #[test]
    fn ratio_examples() {
        let zero = Ar1Estimate { a: 0.0, sigma2: 3.0 };
        assert_eq!(log_pair_likelihood_ratio(&zero, 1.0, -2.0, 5.0).unwrap(), 0.0);
        let est = Ar1Estimate { a: 0.8, sigma2: 1.0 };
        assert_eq!(log_pair_likelihood_ratio(&est, 1.0, 0.7, 0.7).unwrap(), 0.0);
        let got = log_pair_likelihood_ratio(&est, 1.0, 0.9, 0.5).unwrap();
        let want = direct_ratio(0.8, 1.0, 1.0, 0.9, 0.5).ln();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!(log_pair_likelihood_ratio(&est, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn extreme_inputs_stay_finite() {
        let est = Ar1Estimate { a: 0.9, sigma2: VARIANCE_FLOOR };
        let l = log_pair_likelihood_ratio(&est, 1e6, -1e6, 3e6).unwrap();
        assert!(l.is_finite() && l < std::f64::consts::LN_2);
    }

    #[test]
    fn fit_matches_two_pass_formulas() {
        let xs = [0.3, -1.2, 0.8, 2.0, -0.5, 0.1, 1.7];
        let fit = Ar1Fit::from_slice(&xs).unwrap();
        let num: f64 = xs.windows(2).map(|w| w[1] * w[0]).sum();
        let den: f64 = xs[..xs.len() - 1].iter().map(|x| x * x).sum();
        let a = num / den;
        let rss: f64 = xs.windows(2).map(|w| (w[1] - a * w[0]).powi(2)).sum();
        assert!((fit.a_hat().unwrap() - a).abs() < 1e-14);
        assert!((fit.sigma2_hat().unwrap() - rss / (xs.len() - 1) as f64).abs() < 1e-14);
    }

    #[test]
    fn two_point_fit_interpolates() {
        let fit = Ar1Fit::from_slice(&[1.3, -0.4]).unwrap();
        assert!((fit.a_hat().unwrap() - (-0.4 / 1.3)).abs() < 1e-15);
        assert!(fit.sigma2_hat().unwrap() < 1e-15);
        assert_eq!(fit.estimate().unwrap().sigma2, VARIANCE_FLOOR);
        assert!(Ar1Fit::from_slice(&[0.0, 1.0]).unwrap().a_hat().is_none());
    }

    #[test]
    fn warmup_examples() {
        let mut t = ContinuousPairwiseTester::default();
        assert_eq!(t.step_pair(0.4, -1.1).unwrap(), EValue::ONE);
        assert_eq!(t.step_pair(0.9, 0.2).unwrap(), EValue::ONE);
        let e = t.step_pair(-0.6, 1.4).unwrap();
        let est = Ar1Fit::from_slice(&[0.4, -1.1, 0.9, 0.2]).unwrap().estimate().unwrap();
        let want = log_pair_likelihood_ratio(&est, 0.2, -0.6, 1.4).unwrap().exp();
        assert_eq!(e.value(), want);
        assert_ne!(e, EValue::ONE);
    }

    #[test]
    fn constant_zero_prefix_never_bets() {
        let mut t = ContinuousPairwiseTester::default();
        for _ in 0..3 {
            assert_eq!(t.step_pair(0.0, 0.0).unwrap(), EValue::ONE);
        }
        assert_eq!(t.step_pair(1.0, 2.0).unwrap(), EValue::ONE);
    }

    #[test]
    fn params_validation() {
        assert!(Ar1Params::new(1.0, 1.0, Ar1Init::Stationary).is_err());
        assert!(Ar1Params::new(1.0, 1.0, Ar1Init::Standard).is_ok());
        assert!(Ar1Params::new(0.5, 0.0, Ar1Init::Standard).is_err());
        let p = Ar1Params::new(1.2, 1.0, Ar1Init::Standard).unwrap();
        assert!(matches!(ar1_growth_rate_mc(&p, 100, 0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn mc_rates() {
        let null = Ar1Params::new(0.0, 1.0, Ar1Init::Stationary).unwrap();
        let r = ar1_growth_rate_mc(&null, 10_000, 3).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(inverse_evalue_check(&null, 1000, 3).unwrap().mean, 1.0);

        let strong = Ar1Params::new(0.8, 1.0, Ar1Init::Stationary).unwrap();
        let r = ar1_growth_rate_mc(&strong, 20_000, 3).unwrap();
        assert!(r.mean > 3.0 * r.std_error);
        let neg = Ar1Params::new(-0.8, 1.0, Ar1Init::Stationary).unwrap();
        let rn = ar1_growth_rate_mc(&neg, 20_000, 3).unwrap();
        assert!((rn.mean - r.mean).abs() > 3.0 * (rn.std_error.hypot(r.std_error)));

        for a in [0.5, 0.8] {
            let p = Ar1Params::new(a, 1.0, Ar1Init::Stationary).unwrap();
            let inv = inverse_evalue_check(&p, 20_000, 9).unwrap();
            assert!(inv.mean <= 1.0 + 3.0 * inv.std_error, "a = {a}: {inv:?}");
        }
    }

    proptest! {
        #[test]
        fn fair_game(a in -0.99f64..0.99, s2 in 0.01f64..10.0, x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let est = Ar1Estimate { a, sigma2: s2 };
            let l1 = log_pair_likelihood_ratio(&est, x, y, z).unwrap();
            let l2 = log_pair_likelihood_ratio(&est, x, z, y).unwrap();
            prop_assert!((l1.exp() + l2.exp() - 2.0).abs() < 1e-10);
        }

        #[test]
        fn scale_invariance(a in -0.99f64..0.99, s2 in 0.1f64..4.0, c in 0.01f64..100.0,
                            x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let base = log_pair_likelihood_ratio(&Ar1Estimate { a, sigma2: s2 }, x, y, z).unwrap();
            let scaled = log_pair_likelihood_ratio(&Ar1Estimate { a, sigma2: s2 * c * c }, c * x, c * y, c * z).unwrap();
            prop_assert!((base - scaled).abs() < 1e-9);
        }
    }
}
