//! Monte-Carlo checks of martingale, validity and consistency properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pairbet::baselines::{ConformalTester, Jumper};
use pairbet::binary::{Estimator, Pairing, PairwiseBinaryTester};
use pairbet::continuous::{Ar1Fit, Ar1Init, Ar1Params, ContinuousPairwiseTester};
use pairbet::simulate::{generate, run_experiment, ExperimentConfig, Generator, GeneratorSpec, Method};
use pairbet::stats::{mean, sample_sd};
use pairbet::wealth::run_tester;

fn within_three_se(xs: &[f64], target: f64) -> bool {
    let se = sample_sd(xs) / (xs.len() as f64).sqrt();
    (mean(xs) - target).abs() <= 3.0 * se
}

#[test]
fn jumper_is_a_martingale_on_uniform_pvalues() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    for rate in [0.1, 0.01, 0.5] {
        let finals: Vec<f64> = (0..20_000)
            .map(|_| {
                let mut j = Jumper::new(rate).unwrap();
                for _ in 0..30 {
                    j.step(1.0 - rng.random::<f64>()).unwrap();
                }
                j.value()
            })
            .collect();
        assert!(within_three_se(&finals, 1.0), "rate {rate}: mean {}", mean(&finals));
    }
}

#[test]
fn continuous_plug_in_is_a_martingale_under_the_null() {
    let params = Ar1Params::new(0.0, 1.0, Ar1Init::Stationary).unwrap();
    let spec = GeneratorSpec::new(Generator::Ar1(params), 20).unwrap();
    let mut columns = vec![Vec::new(); 10];
    for rep in 0..20_000u64 {
        let data = generate(&spec, rep).unwrap();
        let traj = run_tester(&mut ContinuousPairwiseTester::new(Pairing::Odd), &data).unwrap();
        for (k, e) in traj.entries().iter().enumerate() {
            columns[k].push(e.log_wealth.exp());
        }
    }
    for (k, col) in columns.iter().enumerate() {
        assert!(within_three_se(col, 1.0), "W at t = {}: {}", 2 * (k + 1), mean(col));
    }
}

fn ks_uniform(mut ps: Vec<f64>) -> f64 {
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    ps.iter()
        .enumerate()
        .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn conformal_pvalues_are_uniform() {
    let n = 10_000;
    let critical = 1.63 / (n as f64).sqrt();
    let normal = Ar1Params::new(0.0, 1.0, Ar1Init::Stationary).unwrap();
    for kind in [Generator::Ar1(normal), Generator::Bernoulli { p: 0.3 }] {
        let data = generate(&GeneratorSpec::new(kind, n).unwrap(), 5).unwrap();
        let mut t = ConformalTester::seeded(0.01, 6).unwrap();
        let ps: Vec<f64> = data.iter().map(|&x| t.next_pvalue(x).unwrap()).collect();
        let d = ks_uniform(ps);
        assert!(d < critical, "{kind:?}: KS distance {d}");
    }
}

#[test]
fn ar1_null_has_no_lag_one_autocovariance() {
    let params = Ar1Params::new(0.0, 1.0, Ar1Init::Stationary).unwrap();
    let n = 100_000;
    let xs = generate(&GeneratorSpec::new(Generator::Ar1(params), n).unwrap(), 17).unwrap();
    let m = mean(&xs);
    let cov = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / n as f64;
    assert!(cov.abs() <= 3.0 * (1.0 / n as f64).sqrt(), "lag-1 autocovariance {cov}");
}

#[test]
fn least_squares_fit_is_consistent() {
    for (a, sigma2) in [(0.5, 1.5), (-0.8, 1.0), (0.2, 0.5)] {
        let params = Ar1Params::new(a, sigma2, Ar1Init::Stationary).unwrap();
        let xs = generate(&GeneratorSpec::new(Generator::Ar1(params), 100_000).unwrap(), 99).unwrap();
        let fit = Ar1Fit::from_slice(&xs).unwrap();
        assert!((fit.a_hat().unwrap() - a).abs() <= 0.02);
        assert!((fit.sigma2_hat().unwrap() - sigma2).abs() <= 0.05);
    }
}

#[test]
fn parallel_runs_are_bit_identical() {
    let spec = GeneratorSpec::new(Generator::markov(0.7, 0.4), 3000).unwrap();
    let methods = [
        Method::PairwiseBinary { estimator: Estimator::Smoothed, pairing: Pairing::Odd },
        Method::Conformal { jump_rate: 0.01 },
    ];
    for method in methods {
        let config = ExperimentConfig::new(spec, method, 16, 42);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_experiment(&config).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
        assert_eq!(one, four);
    }
}

#[test]
fn tester_on_second_order_chain_loses_at_the_predicted_rate() {
    // P(1 | x_{t-2}, x_{t-1}); the general rate for this chain is about -0.01366
    let q = [[0.1, 0.2], [0.2, 0.9]];
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let n = 400_000;
    let mut xs = vec![0u8, 0];
    while xs.len() < n {
        let (i, j) = (xs[xs.len() - 2] as usize, xs[xs.len() - 1] as usize);
        xs.push(u8::from(rng.random::<f64>() < q[i][j]));
    }
    let data: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
    let traj = run_tester(&mut PairwiseBinaryTester::default(), &data).unwrap();
    let rate = traj.last_log_wealth() / n as f64;
    assert!(rate < 0.0 && (rate + 0.01366).abs() < 0.002, "empirical rate {rate}");
}
