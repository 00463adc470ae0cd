//! Seeded synthetic samples.
//!
//! Every sample is drawn from a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`, so a `(spec, n, seed)` triple always yields the same
//! sequence. Normal variates use the ziggurat transform, gamma variates the
//! Marsaglia-Tsang squeeze (for shape < 1 a `Gamma(shape + 1)` draw is scaled
//! by `U^(1/shape)`), and uniform variates an affine map of the generator.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Uniform};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Normal { mean: f64, std_dev: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
}

impl DistributionSpec {
    pub fn normal(mean: f64, std_dev: f64) -> Result<Self> {
        if !(std_dev > 0.0 && std_dev.is_finite() && mean.is_finite()) {
            return Err(domain(format!("invalid normal({mean}, {std_dev})")));
        }
        Ok(DistributionSpec::Normal { mean, std_dev })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(domain(format!("invalid gamma({shape}, {scale})")));
        }
        Ok(DistributionSpec::Gamma { shape, scale })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(upper > lower && lower.is_finite() && upper.is_finite()) {
            return Err(domain(format!("invalid uniform({lower}, {upper})")));
        }
        Ok(DistributionSpec::Uniform { lower, upper })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Normal { mean, std_dev } => Self::normal(mean, std_dev),
            DistributionSpec::Gamma { shape, scale } => Self::gamma(shape, scale),
            DistributionSpec::Uniform { lower, upper } => Self::uniform(lower, upper),
        }
        .map(|_| ())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, .. } => mean,
            DistributionSpec::Gamma { shape, scale } => shape * scale,
            DistributionSpec::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { std_dev, .. } => std_dev * std_dev,
            DistributionSpec::Gamma { shape, scale } => shape * scale * scale,
            DistributionSpec::Uniform { lower, upper } => (upper - lower).powi(2) / 12.0,
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::Normal { mean, std_dev } => write!(f, "normal({mean},{std_dev})"),
            DistributionSpec::Gamma { shape, scale } => write!(f, "gamma({shape},{scale})"),
            DistributionSpec::Uniform { lower, upper } => write!(f, "uniform({lower},{upper})"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `normal(0,1)`, `gamma(0.5,1)` or `uniform(0,1)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || domain(format!("cannot parse distribution {s:?}"));
        let s = s.trim();
        let (family, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let (a, b) = args.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        match family.trim().to_ascii_lowercase().as_str() {
            "normal" | "n" => Self::normal(a, b),
            "gamma" => Self::gamma(a, b),
            "uniform" | "u" => Self::uniform(a, b),
            _ => Err(bad()),
        }
    }
}

/// Draws `n` independent values from `spec` with the generator seeded by `seed`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    sample_stream(spec, n, seed, 0)
}

/// Like [`sample`] but on ChaCha stream `stream`, giving independent
/// sequences under one seed.
pub fn sample_stream(
    spec: &DistributionSpec,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(domain("sample size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let out = match *spec {
        DistributionSpec::Normal { mean, std_dev } => {
            let d = Normal::new(mean, std_dev).map_err(|e| domain(e.to_string()))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
        DistributionSpec::Gamma { shape, scale } => {
            let d = Gamma::new(shape, scale).map_err(|e| domain(e.to_string()))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
        DistributionSpec::Uniform { lower, upper } => {
            let d = Uniform::new(lower, upper).map_err(|e| domain(e.to_string()))?;
            d.sample_iter(&mut rng).take(n).collect()
        }
    };
    Ok(out)
}
