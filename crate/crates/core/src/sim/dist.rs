use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

/// Distribution family for service times (ms) and packet lengths (bytes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Dist {
    Constant {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// `rate` is the inverse mean.
    Exponential {
        rate: f64,
    },
    /// Parameters of the underlying normal.
    Lognormal {
        mu: f64,
        sigma: f64,
    },
}

impl Dist {
    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: f64| v.is_finite();
        match *self {
            Dist::Constant { value } if finite(value) && value >= 0.0 => Ok(()),
            Dist::Constant { value } => Err(format!("constant value must be >= 0, got {value}")),
            Dist::Uniform { low, high } if finite(low) && finite(high) && 0.0 <= low && low <= high => Ok(()),
            Dist::Uniform { low, high } => Err(format!(
                "uniform bounds must satisfy 0 <= low <= high, got [{low}, {high}]"
            )),
            Dist::Exponential { rate } if finite(rate) && rate > 0.0 => Ok(()),
            Dist::Exponential { rate } => Err(format!("exponential rate must be > 0, got {rate}")),
            Dist::Lognormal { mu, sigma } if finite(mu) && finite(sigma) && sigma >= 0.0 => Ok(()),
            Dist::Lognormal { sigma, .. } => Err(format!("lognormal sigma must be >= 0, got {sigma}")),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Constant { value } => value,
            Dist::Uniform { low, high } => 0.5 * (low + high),
            Dist::Exponential { rate } => 1.0 / rate,
            Dist::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }

    /// Panics on parameters rejected by [`Dist::validate`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Constant { value } => value,
            Dist::Uniform { low, high } => Uniform::new_inclusive(low, high)
                .expect("validated uniform bounds")
                .sample(rng),
            Dist::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Dist::Lognormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated lognormal").sample(rng),
        }
    }

    /// A packet length: the sample rounded to whole bytes, at least 1.
    pub fn sample_bytes<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        (self.sample(rng).round() as u64).max(1)
    }
}
