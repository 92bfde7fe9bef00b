use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pairbet::binary::{Estimator, Pairing};
use pairbet::continuous::{Ar1Init, Ar1Params};
use pairbet::simulate::{Generator, Method, DEFAULT_GRID_POINTS};

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(name = "pairbet", version, about = "Sequential tests of exchangeability by betting on pairs and triples")]
pub struct Cli {
    /// Master seed for every randomised step.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Test level; rejection happens once wealth reaches 1/alpha.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a sequential test on a column of a delimited file.
    Test(TestArgs),
    /// Replicate a test on simulated data and aggregate the trajectories.
    Simulate(SimulateArgs),
    /// Evaluate a theoretical growth rate.
    GrowthRate(GrowthRateArgs),
    /// Run several methods on identical simulated streams.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Binary,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Smoothed,
    Mle,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Smoothed => Estimator::Smoothed,
            EstimatorArg::Mle => Estimator::Mle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Odd,
    Even,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::Odd => Pairing::Odd,
            PairingArg::Even => Pairing::Even,
        }
    }
}

/// Options shared by every command that builds a tester.
#[derive(Debug, Clone, Args)]
pub struct MethodOptions {
    #[arg(long, value_enum, default_value_t = EstimatorArg::Smoothed)]
    pub estimator: EstimatorArg,

    #[arg(long, value_enum, default_value_t = PairingArg::Odd)]
    pub pairing: PairingArg,

    /// Jump rate for `conformal` when the method name carries none.
    #[arg(long, default_value_t = 0.01)]
    pub jumper_rate: f64,

    /// Number of trajectory points reported.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input: PathBuf,

    /// Zero-based column index, or a header name (implies a header row).
    #[arg(long, default_value = "0")]
    pub column: String,

    #[arg(long, value_enum)]
    pub kind: Kind,

    #[arg(long)]
    pub method: String,

    #[arg(long, default_value_t = ',')]
    pub delimiter: char,

    /// The first row is a header.
    #[arg(long)]
    pub skip_header: bool,

    #[command(flatten)]
    pub options: MethodOptions,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Generator, e.g. `markov:0.9,0.1` or `ar1:0.8,1`.
    #[arg(long = "gen")]
    pub generator: String,

    #[arg(long)]
    pub method: String,

    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,

    #[arg(long, default_value_t = 10)]
    pub reps: usize,

    /// Also emit one log-wealth column per replication.
    #[arg(long)]
    pub per_rep: bool,

    #[command(flatten)]
    pub options: MethodOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateMethod {
    PairwiseBinary,
    PairwiseBinaryGeneral,
    TripleBinary,
    PairwiseContinuous,
    TripleContinuous,
}

#[derive(Debug, Args)]
pub struct GrowthRateArgs {
    #[arg(long, value_enum)]
    pub method: RateMethod,

    #[arg(long)]
    pub p10: Option<f64>,

    #[arg(long)]
    pub p11: Option<f64>,

    #[arg(long)]
    pub a: Option<f64>,

    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Monte-Carlo samples for the continuous rates.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,

    /// `alpha,beta,gamma,p001,p010,p101,p110` for the general binary rate.
    #[arg(long, allow_hyphen_values = true)]
    pub limits: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long = "gen")]
    pub generator: String,

    /// Comma-separated method names.
    #[arg(long)]
    pub methods: String,

    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,

    #[arg(long, default_value_t = 10)]
    pub reps: usize,

    #[command(flatten)]
    pub options: MethodOptions,
}

fn numbers(text: &str, what: &str) -> Result<Vec<f64>, UsageError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| UsageError(format!("{what}: cannot parse '{s}' as a number"))))
        .collect()
}

/// Parses `bernoulli:p`, `markov:p10,p11[,init]` or
/// `ar1:a,sigma2[,stationary|standard]`.
pub fn parse_generator(text: &str) -> Result<Generator, UsageError> {
    let (kind, params) = text
        .split_once(':')
        .ok_or_else(|| UsageError(format!("generator '{text}' must look like kind:params")))?;
    let bad_arity = || UsageError(format!("generator '{text}' has the wrong number of parameters"));
    match kind {
        "bernoulli" => match numbers(params, text)?[..] {
            [p] => Ok(Generator::Bernoulli { p }),
            _ => Err(bad_arity()),
        },
        "markov" => match numbers(params, text)?[..] {
            [p10, p11] => Ok(Generator::markov(p10, p11)),
            [p10, p11, init_prob_one] => Ok(Generator::Markov { p10, p11, init_prob_one }),
            _ => Err(bad_arity()),
        },
        "ar1" => {
            let mut parts: Vec<&str> = params.split(',').collect();
            let init = match parts.last().map(|s| s.trim()) {
                Some("stationary") => Some(Ar1Init::Stationary),
                Some("standard") => Some(Ar1Init::Standard),
                _ => None,
            };
            if init.is_some() {
                parts.pop();
            }
            match numbers(&parts.join(","), text)?[..] {
                [a, sigma2] => Ok(Generator::Ar1(Ar1Params { a, sigma2, init: init.unwrap_or_default() })),
                _ => Err(bad_arity()),
            }
        }
        other => Err(UsageError(format!("unknown generator kind '{other}' (expected bernoulli, markov or ar1)"))),
    }
}

/// Parses a method name; `conformal` takes an optional `:rate`.
pub fn parse_method(text: &str, options: &MethodOptions) -> Result<Method, UsageError> {
    let estimator = options.estimator.into();
    let pairing = options.pairing.into();
    let (name, rate) = match text.split_once(':') {
        Some((name, rate)) => (name, Some(rate)),
        None => (text, None),
    };
    let method = match name.trim() {
        "pairwise-binary" => Method::PairwiseBinary { estimator, pairing },
        "pairwise-continuous" => Method::PairwiseContinuous { pairing },
        "triple-binary" => Method::TripleBinary { estimator },
        "triple-continuous" => Method::TripleContinuous,
        "universal" => Method::Universal,
        "conformal" => {
            let jump_rate = match rate {
                Some(r) => r.trim().parse().map_err(|_| UsageError(format!("bad jump rate in '{text}'")))?,
                None => options.jumper_rate,
            };
            return Ok(Method::Conformal { jump_rate });
        }
        other => {
            return Err(UsageError(format!(
                "unknown method '{other}' (expected pairwise-binary, pairwise-continuous, triple-binary, \
                 triple-continuous, universal or conformal[:rate])"
            )))
        }
    };
    if rate.is_some() {
        return Err(UsageError(format!("method '{name}' takes no ':' parameter")));
    }
    Ok(method)
}
