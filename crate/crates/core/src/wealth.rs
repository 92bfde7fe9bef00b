//! Wealth bookkeeping shared by every tester.
//!
//! Wealth is kept in log space: over `10^5` observations it routinely spans
//! hundreds of orders of magnitude. A trajectory holds one entry per time at
//! which the tester is allowed to stop, including rounds where nothing was
//! wagered.

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};

/// Multiplicative evidence factor for one betting round.
///
/// Stored as its logarithm, so factors far below `f64::MIN_POSITIVE` keep
/// their exact effect on log-wealth.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EValue(f64);

impl EValue {
    /// The no-bet factor.
    pub const ONE: EValue = EValue(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(EValue(value.ln()))
        } else {
            Err(domain(format!("e-value must be finite and nonnegative, got {value}")))
        }
    }

    /// Builds an e-value from its logarithm.
    pub fn from_ln(ln_value: f64) -> Result<Self> {
        if ln_value.is_nan() || ln_value == f64::INFINITY {
            return Err(domain(format!("log e-value must be < +inf, got {ln_value}")));
        }
        Ok(EValue(ln_value))
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn ln(self) -> f64 {
        self.0
    }
}

/// Kind of observation a tester consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataKind {
    /// Only the symbols 0 and 1.
    Binary,
    /// Any finite real number.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthEntry {
    pub time: u64,
    pub log_wealth: f64,
}

/// Log-wealth recorded at the times where stopping is permitted.
///
/// Permitted times are the positive `t` with `t % stride == phase`. Pairwise
/// games use stride 2 (phase 0 for pairs starting at the first observation,
/// phase 1 when pairing starts at the second), triples use stride 3 and the
/// baselines stride 1. Initial wealth is 1, i.e. log-wealth 0 before the
/// first entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrajectory {
    stride: u64,
    phase: u64,
    entries: Vec<WealthEntry>,
}

impl WealthTrajectory {
    pub fn new(stride: u64) -> Result<Self> {
        Self::with_phase(stride, 0)
    }

    pub fn with_phase(stride: u64, phase: u64) -> Result<Self> {
        if stride == 0 {
            return Err(usage("stop stride must be positive"));
        }
        if phase >= stride {
            return Err(usage(format!("phase {phase} must be smaller than stride {stride}")));
        }
        Ok(Self { stride, phase, entries: Vec::new() })
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn entries(&self) -> &[WealthEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_permitted(&self, time: u64) -> bool {
        time > 0 && time % self.stride == self.phase
    }

    /// Log-wealth after the last entry (0 for an empty trajectory).
    pub fn last_log_wealth(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.log_wealth)
    }

    pub fn last_time(&self) -> Option<u64> {
        self.entries.last().map(|e| e.time)
    }

    /// Multiplies wealth by `e` and records the result at `time`.
    ///
    /// Returns the new log-wealth.
    pub fn update_wealth(&mut self, e: EValue, time: u64) -> Result<f64> {
        if e.ln() == f64::NEG_INFINITY {
            return Err(crate::error::numeric(format!(
                "e-value {} would zero the wealth; use a floored (smoothed) estimator",
                e.value()
            )));
        }
        let log_wealth = self.last_log_wealth() + e.ln();
        self.record(time, log_wealth)?;
        Ok(log_wealth)
    }

    /// Records an externally computed log-wealth level at `time`.
    ///
    /// Used by e-processes that are not running products of e-values.
    pub fn record(&mut self, time: u64, log_wealth: f64) -> Result<()> {
        if !self.is_permitted(time) {
            return Err(usage(format!(
                "time {time} is not a permitted stopping time (stride {}, phase {})",
                self.stride, self.phase
            )));
        }
        if let Some(last) = self.last_time() {
            if time <= last {
                return Err(usage(format!("time {time} does not follow last recorded time {last}")));
            }
        }
        if !log_wealth.is_finite() {
            return Err(crate::error::numeric(format!("log-wealth {log_wealth} at time {time} is not finite")));
        }
        self.entries.push(WealthEntry { time, log_wealth });
        Ok(())
    }

    /// Applies one tester round at `time`.
    pub fn apply(&mut self, time: u64, round: Round) -> Result<f64> {
        match round {
            Round::Bet(e) => self.update_wealth(e, time),
            Round::Level(log_wealth) => {
                self.record(time, log_wealth)?;
                Ok(log_wealth)
            }
        }
    }
}

/// Outcome of a level-alpha sequential test on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingDecision {
    pub rejected: bool,
    pub stop_time: Option<u64>,
    /// `1/alpha`.
    pub threshold: f64,
}

/// Rejects at the first recorded time where wealth reaches `1/alpha`.
///
/// The comparison is `log_wealth >= -ln(alpha)`.
pub fn stop_rule(trajectory: &WealthTrajectory, alpha: f64) -> Result<StoppingDecision> {
    let log_threshold = log_threshold(alpha)?;
    let stop_time = trajectory
        .entries
        .iter()
        .find(|e| e.log_wealth >= log_threshold)
        .map(|e| e.time);
    Ok(StoppingDecision { rejected: stop_time.is_some(), stop_time, threshold: 1.0 / alpha })
}

/// `-ln(alpha)`, validating `alpha` in (0, 1).
pub fn log_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(-alpha.ln())
}

/// What a tester reports when it reaches a permitted time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Round {
    /// Wealth is multiplied by this factor (1 for a no-bet round).
    Bet(EValue),
    /// Log-wealth is set to this level (e-processes that are not products).
    Level(f64),
}

/// A streaming sequential test.
///
/// Observations are fed one at a time; at each permitted time the tester
/// reports a [`Round`]. Binary testers take the symbols as `0.0` / `1.0`.
pub trait Tester: Send {
    fn data_kind(&self) -> DataKind;

    fn stride(&self) -> u64;

    fn phase(&self) -> u64 {
        0
    }

    /// Number of observations consumed so far.
    fn time(&self) -> u64;

    fn observe(&mut self, x: f64) -> Result<Option<Round>>;
}

/// Feeds `data` through `tester` and collects the wealth trajectory.
pub fn run_tester<T: Tester + ?Sized>(tester: &mut T, data: &[f64]) -> Result<WealthTrajectory> {
    let mut trajectory = WealthTrajectory::with_phase(tester.stride(), tester.phase())?;
    for &x in data {
        if let Some(round) = tester.observe(x)? {
            trajectory.apply(tester.time(), round)?;
        }
    }
    Ok(trajectory)
}
