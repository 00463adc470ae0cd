//! Approximate CDFs built from ε-approximate quantiles.
//!
//! Quantiles `x_i` are queried at `a` equi-spaced probabilities
//! `p_i = linspace(1/N, 1, a)` and the CDF is the piecewise-linear interpolant
//! through `(x_i, p_i)`. Each `x_i` has true probability within `ε` of `p_i`
//! and the true CDF between two knots is confined to the box spanned by them,
//! so the interpolant is within `1/(a-1) + ε` of the empirical CDF.
//!
//! For a target bound `δ` the pair `(a, ε)` trades along the hyperbola
//! `a = 1/(δ - ε) + 1`; [`eps45`] picks its unit-slope point in the
//! normalized coordinates `(ε/δ, a/N)`.

use std::io::{self, Write};

use crate::error::{domain, state, Error, Result};
use crate::format::g17;
use crate::gk_sketch::QuantileSketch;

/// Quantile error at the unit-slope point of the `(ε, a)` trade-off curve,
/// `max(0, δ - sqrt(δ/N))`.
pub fn eps45(delta: f64, n: u64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(domain("sample size must be positive"));
    }
    Ok((delta - (delta / n as f64).sqrt()).max(0.0))
}

/// Number of probability knots, `min(ceil(1/(δ - ε) + 1), N)`.
pub fn num_probs(n: u64, delta: f64, epsilon: f64) -> Result<usize> {
    if epsilon.is_nan() || delta.is_nan() || epsilon >= delta {
        return Err(domain(format!(
            "epsilon ({epsilon}) must be smaller than delta ({delta})"
        )));
    }
    let a = (1.0 / (delta - epsilon) + 1.0).ceil();
    Ok(a.min(n as f64) as usize)
}

/// Parameters of an approximate CDF over a sample of `n` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPlan {
    pub n: u64,
    /// Target error bound.
    pub delta: f64,
    /// Quantile query error; zero means exact order statistics.
    pub epsilon: f64,
    /// Number of probability knots.
    pub a: usize,
}

impl CdfPlan {
    /// Validates an explicit plan.
    ///
    /// `1/(a-1) + ε <= δ` must hold unless the knot count was capped at `n`.
    pub fn new(n: u64, delta: f64, epsilon: f64, a: usize) -> Result<Self> {
        if n < 3 {
            return Err(domain(format!(
                "approximate CDFs need at least 3 values, got {n}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(epsilon >= 0.0 && epsilon < delta) {
            return Err(domain(format!(
                "epsilon must lie in [0, delta), got {epsilon}"
            )));
        }
        if a < 3 || a as u64 > n {
            return Err(domain(format!("knot count must lie in [3, {n}], got {a}")));
        }
        let plan = CdfPlan {
            n,
            delta,
            epsilon,
            a,
        };
        if plan.error_bound() > delta + 1e-12 && a as u64 != n {
            return Err(domain(format!(
                "1/(a-1) + epsilon = {} exceeds delta = {delta}",
                plan.error_bound()
            )));
        }
        Ok(plan)
    }

    /// Plan with a given knot count and quantile error; `δ` is set to the
    /// resulting bound `1/(a-1) + ε`.
    pub fn with_knots(n: u64, a: usize, epsilon: f64) -> Result<Self> {
        if a < 2 {
            return Err(domain(format!("knot count must be at least 3, got {a}")));
        }
        let delta = 1.0 / (a as f64 - 1.0) + epsilon;
        if delta >= 1.0 {
            return Err(domain(format!(
                "1/(a-1) + epsilon = {delta} is not below 1"
            )));
        }
        Self::new(n, delta, epsilon, a)
    }

    /// Plan meeting error bound `delta` with `ε = eps45(δ, n)`.
    pub fn from_delta(delta: f64, n: u64) -> Result<Self> {
        let epsilon = eps45(delta, n)?;
        let a = num_probs(n, delta, epsilon)?.max(3.min(n as usize));
        Self::new(n, delta, epsilon, a)
    }

    /// Plan for one side of a two-sample test with KS precision `phi`;
    /// each CDF receives half of the budget.
    pub fn from_phi(phi: f64, n: u64) -> Result<Self> {
        if !(phi > 0.0 && phi < 2.0) {
            return Err(domain(format!("phi must lie in (0, 2), got {phi}")));
        }
        Self::from_delta(phi / 2.0, n)
    }

    /// Certified bound `1/(a-1) + ε` on the CDF error over the knot range.
    pub fn error_bound(&self) -> f64 {
        1.0 / (self.a as f64 - 1.0) + self.epsilon
    }

    /// `a` equi-spaced probabilities from `1/N` to `1` inclusive.
    pub fn probs(&self) -> Vec<f64> {
        let first = 1.0 / self.n as f64;
        let step = (1.0 - first) / (self.a as f64 - 1.0);
        let mut probs: Vec<f64> = (0..self.a).map(|i| first + i as f64 * step).collect();
        probs[self.a - 1] = 1.0;
        probs
    }
}

/// Plan for KS precision `phi` over `n` values.
pub fn plan_from_phi(phi: f64, n: u64) -> Result<CdfPlan> {
    CdfPlan::from_phi(phi, n)
}

/// Certified CDF error of `plan`.
pub fn error_bound(plan: &CdfPlan) -> f64 {
    plan.error_bound()
}

/// Piecewise-linear CDF through `(quantiles[i], probs[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxCdf {
    plan: CdfPlan,
    probs: Vec<f64>,
    quantiles: Vec<f64>,
}

impl ApproxCdf {
    /// Queries `sketch` at the plan's knots. The sketch's own ε is what the
    /// quantiles honour; `plan.epsilon` is not checked against it.
    pub fn from_sketch(sketch: &QuantileSketch, plan: CdfPlan) -> Result<Self> {
        if sketch.count() != plan.n {
            return Err(state(format!(
                "plan expects {} values but the sketch holds {}",
                plan.n,
                sketch.count()
            )));
        }
        let probs = plan.probs();
        let quantiles = sketch.query_quantiles(&probs)?;
        Ok(ApproxCdf {
            plan,
            probs,
            quantiles,
        })
    }

    /// Exact order statistics at rank `ceil(p N)` from already sorted data.
    fn from_sorted(sorted: &[f64], plan: CdfPlan) -> Self {
        let n = sorted.len() as f64;
        let probs = plan.probs();
        let quantiles = probs
            .iter()
            .map(|&p| {
                let rank = ((p * n) - 1e-9).ceil().clamp(1.0, n) as usize;
                sorted[rank - 1]
            })
            .collect();
        ApproxCdf {
            plan,
            probs,
            quantiles,
        }
    }

    pub fn plan(&self) -> &CdfPlan {
        &self.plan
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Interpolated CDF at `x`.
    ///
    /// Below the first knot this is `probs[0]`, at or above the last it is 1.
    /// Where several knots share a value the largest of their probabilities
    /// is returned.
    pub fn eval(&self, x: f64) -> f64 {
        let q = &self.quantiles;
        let p = &self.probs;
        if x < q[0] {
            return p[0];
        }
        // first knot strictly above x
        let j = q.partition_point(|&v| v <= x);
        if j == q.len() {
            return p[j - 1];
        }
        let i = j - 1;
        if q[i] == x {
            return p[i];
        }
        p[i] + (x - q[i]) / (q[j] - q[i]) * (p[j] - p[i])
    }

    /// Writes the knots as `prob,quantile` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "prob,quantile")?;
        for (p, q) in self.probs.iter().zip(&self.quantiles) {
            writeln!(w, "{},{}", g17(*p), g17(*q))?;
        }
        Ok(())
    }
}

/// Builds the approximate CDF of `data` under `plan`: a sketch with
/// `plan.epsilon` when it is positive, a full sort otherwise.
pub fn build_cdf(data: &[f64], plan: CdfPlan) -> Result<ApproxCdf> {
    if data.len() as u64 != plan.n {
        return Err(state(format!(
            "plan expects {} values but {} were supplied",
            plan.n,
            data.len()
        )));
    }
    if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value {bad}")));
    }
    if plan.epsilon == 0.0 {
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(ApproxCdf::from_sorted(&sorted, plan))
    } else {
        let sketch = QuantileSketch::from_values(plan.epsilon, data.iter().copied())?;
        ApproxCdf::from_sketch(&sketch, plan)
    }
}

/// Interpolated CDF value; see [`ApproxCdf::eval`].
pub fn eval_cdf(cdf: &ApproxCdf, x: f64) -> f64 {
    cdf.eval(x)
}

/// Right-continuous empirical CDF `F_N(x) = #{v <= x} / N`.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(domain("empirical CDF of an empty sample"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in sample".into()));
        }
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Largest `|cdf(x) - F_N(x)|` over the sample points.
    pub fn max_abs_error(&self, cdf: &ApproxCdf) -> f64 {
        let n = self.sorted.len();
        let mut worst = 0.0f64;
        let mut i = 0;
        while i < n {
            let x = self.sorted[i];
            let mut j = i + 1;
            while j < n && self.sorted[j] == x {
                j += 1;
            }
            let exact = j as f64 / n as f64;
            worst = worst.max((cdf.eval(x) - exact).abs());
            i = j;
        }
        worst
    }

    /// Writes every sample point as `value,prob` CSV (`N` rows).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "value,prob")?;
        let n = self.sorted.len() as f64;
        for (i, v) in self.sorted.iter().enumerate() {
            writeln!(w, "{},{}", g17(*v), g17((i + 1) as f64 / n))?;
        }
        Ok(())
    }
}
