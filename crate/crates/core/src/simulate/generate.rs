use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::continuous::{Ar1Init, Ar1Params};
use crate::error::{domain, usage, Result};

/// Data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    /// iid symbols with `P(1) = p`.
    Bernoulli { p: f64 },
    /// Two-state chain with `P(1 | 0) = p10`, `P(1 | 1) = p11` and
    /// `P(X_1 = 1) = init_prob_one`.
    Markov { p10: f64, p11: f64, init_prob_one: f64 },
    /// `X_{t+1} = a X_t + eps_{t+1}`, `eps ~ N(0, sigma2)`.
    Ar1(Ar1Params),
}

impl Generator {
    pub fn markov(p10: f64, p11: f64) -> Self {
        Generator::Markov { p10, p11, init_prob_one: 0.5 }
    }

    /// True for the generators that emit only 0 and 1.
    pub fn is_binary(&self) -> bool {
        !matches!(self, Generator::Ar1(_))
    }

    /// True when the generated sequence is exchangeable (iid here).
    pub fn is_null(&self) -> bool {
        match *self {
            Generator::Bernoulli { .. } => true,
            Generator::Markov { p10, p11, init_prob_one } => p10 == p11 && init_prob_one == p10,
            Generator::Ar1(p) => p.a == 0.0 && (p.init == Ar1Init::Stationary || p.sigma2 == 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(domain(format!("{name} = {v} is not a probability")))
            }
        };
        match *self {
            Generator::Bernoulli { p } => check("p", p),
            Generator::Markov { p10, p11, init_prob_one } => {
                check("p10", p10)?;
                check("p11", p11)?;
                check("init_prob_one", init_prob_one)
            }
            Generator::Ar1(p) => Ar1Params::new(p.a, p.sigma2, p.init).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: Generator,
    pub horizon: u64,
}

impl GeneratorSpec {
    pub fn new(kind: Generator, horizon: u64) -> Result<Self> {
        let spec = Self { kind, horizon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(usage("horizon must be positive"));
        }
        self.kind.validate()
    }
}

/// Generates `spec.horizon` observations from a fresh ChaCha20 stream
/// seeded with `seed`.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Vec<f64>> {
    generate_with(spec, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Generates from a caller-supplied source.
///
/// Bernoulli draws compare one uniform `f64` against the probability; normal
/// draws use the ziggurat sampler of `rand_distr`.
pub fn generate_with<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.horizon as usize;
    let mut out = Vec::with_capacity(n);
    let coin = |p: f64, rng: &mut R| if rng.random::<f64>() < p { 1.0 } else { 0.0 };
    match spec.kind {
        Generator::Bernoulli { p } => {
            for _ in 0..n {
                out.push(coin(p, rng));
            }
        }
        Generator::Markov { p10, p11, init_prob_one } => {
            let mut x = coin(init_prob_one, rng);
            out.push(x);
            for _ in 1..n {
                x = coin(if x == 1.0 { p11 } else { p10 }, rng);
                out.push(x);
            }
        }
        Generator::Ar1(params) => {
            let first_sd = match params.init {
                Ar1Init::Stationary => params.stationary_variance()?.sqrt(),
                Ar1Init::Standard => 1.0,
            };
            let noise = params.sigma2.sqrt();
            let mut x = first_sd * Distribution::<f64>::sample(&StandardNormal, rng);
            out.push(x);
            for _ in 1..n {
                let z: f64 = Distribution::<f64>::sample(&StandardNormal, rng);
                x = params.a * x + noise * z;
                out.push(x);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_streams() {
        let ones = generate(&GeneratorSpec::new(Generator::Bernoulli { p: 1.0 }, 500).unwrap(), 4).unwrap();
        assert!(ones.iter().all(|&x| x == 1.0));
        let kind = Generator::Markov { p10: 0.0, p11: 1.0, init_prob_one: 1.0 };
        let ones = generate(&GeneratorSpec::new(kind, 500).unwrap(), 4).unwrap();
        assert!(ones.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn validation() {
        assert!(GeneratorSpec::new(Generator::Bernoulli { p: 1.5 }, 10).is_err());
        assert!(GeneratorSpec::new(Generator::Bernoulli { p: 0.5 }, 0).is_err());
        let bad = Ar1Params { a: 1.0, sigma2: 1.0, init: Ar1Init::Stationary };
        assert!(matches!(GeneratorSpec::new(Generator::Ar1(bad), 10), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = GeneratorSpec::new(Generator::markov(0.3, 0.6), 1000).unwrap();
        assert_eq!(generate(&spec, 11).unwrap(), generate(&spec, 11).unwrap());
        assert_ne!(generate(&spec, 11).unwrap(), generate(&spec, 12).unwrap());
    }

    #[test]
    fn null_detection() {
        assert!(Generator::Bernoulli { p: 0.3 }.is_null());
        assert!(!Generator::markov(0.9, 0.1).is_null());
        assert!(Generator::Markov { p10: 0.4, p11: 0.4, init_prob_one: 0.4 }.is_null());
        let std0 = Ar1Params::new(0.0, 1.0, Ar1Init::Standard).unwrap();
        assert!(Generator::Ar1(std0).is_null());
        let std2 = Ar1Params::new(0.0, 2.0, Ar1Init::Standard).unwrap();
        assert!(!Generator::Ar1(std2).is_null());
    }
}
