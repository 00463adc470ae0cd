//! Approximate two-sample Kolmogorov-Smirnov testing.
//!
//! The pipeline is: stream each sample through a Greenwald-Khanna summary
//! ([`gk_sketch`]), query a grid of equi-spaced probabilities to obtain an
//! approximate CDF with a certified error bound ([`approx_cdf`]), then compare
//! the two interpolated CDFs ([`ks`]). The error budget of each CDF is chosen
//! from the significance level and the desired precision of the p-value.
//!
//! [`synth`] and [`harness`] provide the seeded synthetic experiments used to
//! validate the error bounds and the test decisions.

pub mod approx_cdf;
pub mod cli;
pub mod error;
pub mod format;
pub mod gk_sketch;
pub mod harness;
pub mod ks;
pub mod synth;

pub use approx_cdf::{build_cdf, eps45, num_probs, ApproxCdf, CdfPlan};
pub use error::{Error, Result};
pub use gk_sketch::{QuantileSketch, SketchTuple};
pub use ks::{KsOutcome, TestPrecision};
pub use synth::DistributionSpec;
