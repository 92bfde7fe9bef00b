use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::Context;
use clap::ValueEnum;
use serde_json::Value;

use pairbet::binary::{
    check_positivity_conditions, general_growth_rate, markov_growth_rate, GeneralLimits, MarkovParams,
};
use pairbet::continuous::{ar1_growth_rate_mc, inverse_evalue_check, Ar1Init, Ar1Params};
use pairbet::simulate::{
    grid_indices, method_rng, run_comparison, run_experiment, ExperimentConfig, GeneratorSpec, Method,
};
use pairbet::triple::{triple_growth_rate_ar1_mc, triple_growth_rate_markov};
use pairbet::wealth::{log_threshold, run_tester, stop_rule};
use pairbet::DataKind;

use crate::args::{
    parse_generator, parse_method, Cli, Command, CompareArgs, Format, GrowthRateArgs, Kind, RateMethod,
    SimulateArgs, TestArgs,
};
use crate::input::read_column;
use crate::report::{num, Report};
use crate::UsageError;

/// Runs one parsed command line and writes its report.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    log_threshold(cli.alpha)?;
    let report = match &cli.command {
        Command::Test(args) => cmd_test(cli, args)?,
        Command::Simulate(args) => cmd_simulate(cli, args)?,
        Command::GrowthRate(args) => cmd_growth_rate(cli, args)?,
        Command::Compare(args) => cmd_compare(cli, args)?,
    };
    let sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match cli.format {
        Format::Csv => report.write_csv(&mut sink)?,
        Format::Json => report.write_json(&mut sink)?,
    }
    sink.flush()?;
    Ok(())
}

fn check_grid(grid: usize) -> Result<(), UsageError> {
    if grid == 0 {
        return Err(UsageError("--grid must be positive".into()));
    }
    Ok(())
}

fn value_name(v: &impl ValueEnum) -> String {
    v.to_possible_value().map_or_else(String::new, |p| p.get_name().to_string())
}

fn common_params(report: &mut Report, cli: &Cli) {
    report.param("seed", cli.seed);
    report.param("alpha", num(cli.alpha));
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> anyhow::Result<Report> {
    let method = parse_method(&args.method, &args.options)?;
    check_grid(args.options.grid)?;
    if method.data_kind() == DataKind::Binary && args.kind == Kind::Real {
        return Err(UsageError(format!("method {} needs --kind binary", method.name())).into());
    }
    let data = read_column(&args.input, &args.column, args.kind, args.delimiter, args.skip_header)?;
    let mut tester = method.build(method_rng(cli.seed, 0))?;
    let trajectory = run_tester(tester.as_mut(), &data)?;
    let decision = stop_rule(&trajectory, cli.alpha)?;

    let mut report = Report::new("test");
    common_params(&mut report, cli);
    report.param("input", args.input.display().to_string());
    report.param("column", args.column.clone());
    report.param("kind", value_name(&args.kind));
    report.param("method", method.name());
    report.param("estimator", value_name(&args.options.estimator));
    report.param("pairing", value_name(&args.options.pairing));
    report.summary("observations", data.len() as u64);
    report.summary("final_time", trajectory.last_time().map_or(Value::Null, Value::from));
    report.summary("final_log_wealth", num(trajectory.last_log_wealth()));
    report.summary("rejected", decision.rejected);
    report.summary("stop_time", decision.stop_time.map_or(Value::Null, Value::from));
    report.summary("threshold", num(decision.threshold));
    report.columns = vec!["time".into(), "log_wealth".into()];
    for i in grid_indices(trajectory.len(), args.options.grid) {
        let e = trajectory.entries()[i];
        report.rows.push(vec![e.time.into(), num(e.log_wealth)]);
    }
    Ok(report)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> anyhow::Result<Report> {
    let generator = parse_generator(&args.generator)?;
    let method = parse_method(&args.method, &args.options)?;
    check_grid(args.options.grid)?;
    let spec = GeneratorSpec::new(generator, args.steps)?;
    let config = ExperimentConfig {
        generator: spec,
        method,
        replications: args.reps,
        seed: cli.seed,
        alpha: cli.alpha,
        grid_points: args.options.grid,
    };
    let result = run_experiment(&config)?;

    let mut report = Report::new("simulate");
    common_params(&mut report, cli);
    report.param("generator", args.generator.clone());
    report.param("method", method.name());
    report.param("steps", args.steps);
    report.param("reps", args.reps as u64);
    report.summary("slope", num(result.slope));
    report.summary("slope_std_error", num(result.slope_std_error));
    report.summary("rejection_fraction", num(result.rejection_fraction));
    report.columns = vec!["time".into(), "mean_log_wealth".into(), "sd_log_wealth".into()];
    if args.per_rep {
        report.columns.extend((0..args.reps).map(|r| format!("rep_{r}")));
    }
    for (k, &time) in result.times.iter().enumerate() {
        let mut row = vec![time.into(), num(result.mean[k]), num(result.sd[k])];
        if args.per_rep {
            row.extend(result.replications.iter().map(|r| num(r.log_wealth[k])));
        }
        report.rows.push(row);
    }
    Ok(report)
}

fn markov_params(args: &GrowthRateArgs) -> anyhow::Result<MarkovParams> {
    match (args.p10, args.p11) {
        (Some(p10), Some(p11)) => Ok(MarkovParams::new(p10, p11)?),
        _ => Err(UsageError("--p10 and --p11 are required for this method".into()).into()),
    }
}

fn ar1_params(args: &GrowthRateArgs) -> anyhow::Result<Ar1Params> {
    let a = args.a.ok_or_else(|| UsageError("--a is required for this method".into()))?;
    Ok(Ar1Params::new(a, args.sigma2, Ar1Init::Stationary)?)
}

fn cmd_growth_rate(cli: &Cli, args: &GrowthRateArgs) -> anyhow::Result<Report> {
    let mut report = Report::new("growth-rate");
    report.param("method", value_name(&args.method));
    report.columns = vec!["quantity".into(), "value".into()];
    let mut rows: Vec<(&str, Value)> = Vec::new();
    match args.method {
        RateMethod::PairwiseBinary | RateMethod::TripleBinary => {
            let m = markov_params(args)?;
            report.param("p10", num(m.p10));
            report.param("p11", num(m.p11));
            let rate = match args.method {
                RateMethod::PairwiseBinary => markov_growth_rate(&m)?,
                _ => triple_growth_rate_markov(&m)?,
            };
            rows.push(("rate", num(rate)));
        }
        RateMethod::PairwiseBinaryGeneral => {
            let text = args.limits.as_deref().ok_or_else(|| UsageError("--limits is required".into()))?;
            let v: Vec<f64> = text
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| UsageError(format!("cannot parse --limits '{text}'")))?;
            let [alpha, beta, gamma, p001, p010, p101, p110] = v[..] else {
                return Err(UsageError("--limits takes alpha,beta,gamma,p001,p010,p101,p110".into()).into());
            };
            let limits = GeneralLimits { alpha, beta, gamma, triples: [[p001, p010], [p101, p110]] };
            report.param("limits", text.to_string());
            let c = check_positivity_conditions(&limits)?;
            rows.push(("rate", num(general_growth_rate(&limits)?)));
            rows.push(("a", num(c.a)));
            rows.push(("b", num(c.b)));
            rows.push(("first_condition", c.first.into()));
            rows.push(("second_condition", c.second.into()));
            rows.push(("distinct", c.distinct.into()));
        }
        RateMethod::PairwiseContinuous | RateMethod::TripleContinuous => {
            let p = ar1_params(args)?;
            report.param("a", num(p.a));
            report.param("sigma2", num(p.sigma2));
            report.param("samples", args.samples as u64);
            report.param("seed", cli.seed);
            let est = match args.method {
                RateMethod::PairwiseContinuous => ar1_growth_rate_mc(&p, args.samples, cli.seed)?,
                _ => triple_growth_rate_ar1_mc(&p, args.samples, cli.seed)?,
            };
            rows.push(("rate", num(est.mean)));
            rows.push(("std_error", num(est.std_error)));
            if args.method == RateMethod::PairwiseContinuous {
                let inv = inverse_evalue_check(&p, args.samples, cli.seed)?;
                rows.push(("inverse_evalue_mean", num(inv.mean)));
                rows.push(("inverse_evalue_std_error", num(inv.std_error)));
            }
        }
    }
    report.rows = rows.into_iter().map(|(k, v)| vec![k.into(), v]).collect();
    Ok(report)
}

fn cmd_compare(cli: &Cli, args: &CompareArgs) -> anyhow::Result<Report> {
    let generator = parse_generator(&args.generator)?;
    check_grid(args.options.grid)?;
    let methods: Vec<Method> =
        args.methods.split(',').map(|m| parse_method(m, &args.options)).collect::<Result<_, _>>()?;
    let spec = GeneratorSpec::new(generator, args.steps)?;
    let results = run_comparison(spec, &methods, args.reps, cli.seed, cli.alpha, args.options.grid)?;

    let mut report = Report::new("compare");
    common_params(&mut report, cli);
    report.param("generator", args.generator.clone());
    report.param("methods", methods.iter().map(Method::name).collect::<Vec<_>>().join(","));
    report.param("steps", args.steps);
    report.param("reps", args.reps as u64);
    report.columns = vec!["method".into(), "time".into(), "mean_log_wealth".into(), "sd_log_wealth".into()];
    for r in &results {
        report.summary(format!("slope[{}]", r.method_name), num(r.slope));
        report.summary(format!("slope_std_error[{}]", r.method_name), num(r.slope_std_error));
        report.summary(format!("rejection_fraction[{}]", r.method_name), num(r.rejection_fraction));
        for (k, &time) in r.times.iter().enumerate() {
            report.rows.push(vec![r.method_name.clone().into(), time.into(), num(r.mean[k]), num(r.sd[k])]);
        }
    }
    Ok(report)
}
