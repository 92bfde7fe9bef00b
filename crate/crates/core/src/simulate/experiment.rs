use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_with, GeneratorSpec};
use crate::baselines::{ConformalTester, UniversalTester};
use crate::binary::{Estimator, Pairing, PairwiseBinaryTester};
use crate::continuous::ContinuousPairwiseTester;
use crate::error::{usage, Result};
use crate::stats::{mean, ols_slope, sample_sd};
use crate::triple::{TripleBinaryTester, TripleContinuousTester};
use crate::wealth::{log_threshold, run_tester, stop_rule, DataKind, StoppingDecision, Tester, WealthTrajectory};

pub const DEFAULT_GRID_POINTS: usize = 200;

/// A sequential test that can be replicated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    PairwiseBinary { estimator: Estimator, pairing: Pairing },
    PairwiseContinuous { pairing: Pairing },
    TripleBinary { estimator: Estimator },
    TripleContinuous,
    Universal,
    Conformal { jump_rate: f64 },
}

impl Method {
    /// Stable identifier used in tables.
    pub fn name(&self) -> String {
        match self {
            Method::PairwiseBinary { .. } => "pairwise-binary".into(),
            Method::PairwiseContinuous { .. } => "pairwise-continuous".into(),
            Method::TripleBinary { .. } => "triple-binary".into(),
            Method::TripleContinuous => "triple-continuous".into(),
            Method::Universal => "universal".into(),
            Method::Conformal { jump_rate } => format!("conformal:{jump_rate}"),
        }
    }

    pub fn data_kind(&self) -> DataKind {
        match self {
            Method::PairwiseBinary { .. } | Method::TripleBinary { .. } | Method::Universal => DataKind::Binary,
            _ => DataKind::Real,
        }
    }

    /// A fresh tester; `rng` feeds any internal randomisation.
    pub fn build(&self, rng: ChaCha20Rng) -> Result<Box<dyn Tester>> {
        Ok(match *self {
            Method::PairwiseBinary { estimator, pairing } => Box::new(PairwiseBinaryTester::new(estimator, pairing)),
            Method::PairwiseContinuous { pairing } => Box::new(ContinuousPairwiseTester::new(pairing)),
            Method::TripleBinary { estimator } => Box::new(TripleBinaryTester::new(estimator)),
            Method::TripleContinuous => Box::new(TripleContinuousTester::new()),
            Method::Universal => Box::new(UniversalTester::new()),
            Method::Conformal { jump_rate } => Box::new(ConformalTester::new(jump_rate, rng)?),
        })
    }

    fn check_compatible(&self, spec: &GeneratorSpec) -> Result<()> {
        if self.data_kind() == DataKind::Binary && !spec.kind.is_binary() {
            return Err(usage(format!("method {} needs binary data but the generator is {:?}", self.name(), spec.kind)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub method: Method,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    pub grid_points: usize,
}

impl ExperimentConfig {
    pub fn new(generator: GeneratorSpec, method: Method, replications: usize, seed: u64) -> Self {
        Self { generator, method, replications, seed, alpha: 0.05, grid_points: DEFAULT_GRID_POINTS }
    }

    fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.replications == 0 {
            return Err(usage("at least one replication is required"));
        }
        if self.grid_points == 0 {
            return Err(usage("the trajectory grid needs at least one point"));
        }
        log_threshold(self.alpha)?;
        self.method.check_compatible(&self.generator)
    }
}

/// One replication, with log-wealth sampled on the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub log_wealth: Vec<f64>,
    pub final_log_wealth: f64,
    pub decision: StoppingDecision,
    /// Least-squares slope of this replication over the final half.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub method_name: String,
    pub times: Vec<u64>,
    pub replications: Vec<Replication>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Slope of `mean` against time over grid times `>= horizon / 2`.
    pub slope: f64,
    /// Standard deviation of the per-replication slopes over `sqrt(reps)`.
    pub slope_std_error: f64,
    pub rejection_fraction: f64,
}

pub fn data_rng(seed: u64, replication: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2 * replication as u64);
    rng
}

pub fn method_rng(seed: u64, replication: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2 * replication as u64 + 1);
    rng
}

/// Entry positions kept on a grid of at most `points` out of `len`: the
/// `ceil((i + 1) len / points)`-th entries, deduplicated.
pub fn grid_indices(len: usize, points: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..points).map(|i| ((i + 1) * len).div_ceil(points)).filter(|&k| k > 0).map(|k| k - 1).collect();
    out.dedup();
    out
}

/// Positions of `times` in the final half of the horizon.
fn final_half(times: &[u64], horizon: u64) -> std::ops::Range<usize> {
    let start = times.partition_point(|&t| 2 * t < horizon);
    start..times.len()
}

fn slope_over(times: &[u64], ys: &[f64], range: std::ops::Range<usize>) -> f64 {
    let xs: Vec<f64> = times[range.clone()].iter().map(|&t| t as f64).collect();
    ols_slope(&xs, &ys[range])
}

fn run_replication(config: &ExperimentConfig, rep: usize) -> Result<(Vec<u64>, WealthTrajectory)> {
    let data = generate_with(&config.generator, &mut data_rng(config.seed, rep))?;
    let mut tester = config.method.build(method_rng(config.seed, rep))?;
    let trajectory = run_tester(tester.as_mut(), &data)?;
    let idx = grid_indices(trajectory.len(), config.grid_points);
    let times = idx.iter().map(|&i| trajectory.entries()[i].time).collect();
    Ok((times, trajectory))
}

/// Runs the replications in parallel and aggregates them.
///
/// Output is bit-identical for any thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let runs: Vec<(Vec<u64>, Replication)> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let (times, traj) = run_replication(config, rep)?;
            let idx = grid_indices(traj.len(), config.grid_points);
            let log_wealth: Vec<f64> = idx.iter().map(|&i| traj.entries()[i].log_wealth).collect();
            let decision = stop_rule(&traj, config.alpha)?;
            let slope = slope_over(&times, &log_wealth, final_half(&times, config.generator.horizon));
            let replication = Replication { final_log_wealth: traj.last_log_wealth(), log_wealth, decision, slope };
            Ok((times, replication))
        })
        .collect::<Result<_>>()?;
    let times = runs[0].0.clone();
    let replications: Vec<Replication> = runs.into_iter().map(|(_, r)| r).collect();
    Ok(aggregate(config, times, replications))
}

fn aggregate(config: &ExperimentConfig, times: Vec<u64>, replications: Vec<Replication>) -> ExperimentResult {
    let column = |k: usize| replications.iter().map(|r| r.log_wealth[k]).collect::<Vec<_>>();
    let mean_col: Vec<f64> = (0..times.len()).map(|k| mean(&column(k))).collect();
    let sd_col: Vec<f64> = (0..times.len()).map(|k| sample_sd(&column(k))).collect();
    let slope = slope_over(&times, &mean_col, final_half(&times, config.generator.horizon));
    let slopes: Vec<f64> = replications.iter().map(|r| r.slope).collect();
    let rejected = replications.iter().filter(|r| r.decision.rejected).count();
    ExperimentResult {
        config: *config,
        method_name: config.method.name(),
        slope,
        slope_std_error: sample_sd(&slopes) / (slopes.len() as f64).sqrt(),
        rejection_fraction: rejected as f64 / replications.len() as f64,
        times,
        replications,
        mean: mean_col,
        sd: sd_col,
    }
}

/// Fraction of null replications rejected at level `config.alpha`.
pub fn estimate_type1(config: &ExperimentConfig) -> Result<f64> {
    if !config.generator.kind.is_null() {
        return Err(usage(format!(
            "{:?} is not exchangeable; the rejection fraction would estimate power, not size",
            config.generator.kind
        )));
    }
    Ok(run_experiment(config)?.rejection_fraction)
}

/// Runs every method on the same generated streams.
///
/// Fails before running anything if a method cannot consume the generator's
/// data.
pub fn run_comparison(
    generator: GeneratorSpec,
    methods: &[Method],
    replications: usize,
    seed: u64,
    alpha: f64,
    grid_points: usize,
) -> Result<Vec<ExperimentResult>> {
    let configs: Vec<ExperimentConfig> = methods
        .iter()
        .map(|&method| ExperimentConfig { generator, method, replications, seed, alpha, grid_points })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    configs.iter().map(run_experiment).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::{markov_growth_rate, MarkovParams};
    use crate::continuous::{Ar1Init, Ar1Params};
    use crate::simulate::Generator;

    fn pairwise() -> Method {
        Method::PairwiseBinary { estimator: Estimator::Smoothed, pairing: Pairing::Odd }
    }

    #[test]
    fn grid_examples() {
        assert_eq!(grid_indices(5, 200), vec![0, 1, 2, 3, 4]);
        let g = grid_indices(50_000, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 249);
        assert_eq!(*g.last().unwrap(), 49_999);
        assert!(grid_indices(0, 10).is_empty());
    }

    #[test]
    fn slope_recovers_linear_input() {
        let times: Vec<u64> = (1..=100).map(|k| 2 * k).collect();
        let ys: Vec<f64> = times.iter().map(|&t| 0.037 * t as f64 - 1.0).collect();
        let s = slope_over(&times, &ys, final_half(&times, 200));
        assert!((s - 0.037).abs() < 1e-12);
    }

    #[test]
    fn incompatible_method_is_a_usage_error() {
        let ar = Generator::Ar1(Ar1Params::new(0.8, 1.0, Ar1Init::Standard).unwrap());
        let spec = GeneratorSpec::new(ar, 100).unwrap();
        let err = run_experiment(&ExperimentConfig::new(spec, pairwise(), 2, 0)).unwrap_err();
        assert!(matches!(&err, crate::Error::Usage(m) if m.contains("pairwise-binary")));
        let err = run_comparison(spec, &[Method::TripleContinuous, Method::Universal], 2, 0, 0.05, 10).unwrap_err();
        assert!(matches!(&err, crate::Error::Usage(m) if m.contains("universal")));
    }

    #[test]
    fn type1_requires_null() {
        let spec = GeneratorSpec::new(Generator::markov(0.9, 0.1), 100).unwrap();
        assert!(matches!(estimate_type1(&ExperimentConfig::new(spec, pairwise(), 2, 0)), Err(crate::Error::Usage(_))));
        let spec = GeneratorSpec::new(Generator::Bernoulli { p: 0.5 }, 20).unwrap();
        let mut c = ExperimentConfig::new(spec, pairwise(), 200, 3);
        c.alpha = 0.5;
        let f = estimate_type1(&c).unwrap();
        assert!(f <= 0.5 + 3.0 * (0.25f64 / 200.0).sqrt());
    }

    #[test]
    fn aggregate_matches_replications() {
        let spec = GeneratorSpec::new(Generator::markov(0.7, 0.3), 2000).unwrap();
        let r = run_experiment(&ExperimentConfig::new(spec, pairwise(), 6, 8)).unwrap();
        assert_eq!(r.times.len(), 200);
        assert_eq!(*r.times.last().unwrap(), 2000);
        for k in 0..r.times.len() {
            let col: Vec<f64> = r.replications.iter().map(|rep| rep.log_wealth[k]).collect();
            assert!((mean(&col) - r.mean[k]).abs() < 1e-12);
            assert!((sample_sd(&col) - r.sd[k]).abs() < 1e-12);
        }
        let mean_slope = mean(&r.replications.iter().map(|x| x.slope).collect::<Vec<_>>());
        assert!((mean_slope - r.slope).abs() < 1e-12);
        let rate = markov_growth_rate(&MarkovParams::new(0.7, 0.3).unwrap()).unwrap();
        assert!(r.slope > 0.0 && rate > 0.0);
    }

    #[test]
    fn same_data_across_methods() {
        let spec = GeneratorSpec::new(Generator::markov(0.6, 0.4), 300).unwrap();
        let a = generate_with(&spec, &mut data_rng(5, 2)).unwrap();
        let b = generate_with(&spec, &mut data_rng(5, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_with(&spec, &mut data_rng(5, 3)).unwrap());
    }
}
