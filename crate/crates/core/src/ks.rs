//! Two-sample Kolmogorov-Smirnov distances and significance.
//!
//! Three distance estimators live here:
//!
//! * [`exact_ks_distance`] sorts both samples; it is the reference.
//! * [`approx_two_sample_ks`] compares two interpolated [`ApproxCdf`]s at the
//!   union of their knots. Its error is at most the sum of the two CDF bounds.
//! * [`lall_ks`] reads midpoint rank estimates straight out of two sealed
//!   Greenwald-Khanna sketches.
//!
//! Significance uses the asymptotic Kolmogorov distribution:
//! `P(D > d) = Q_KS(sqrt(NM/(N+M)) d)` with
//! `Q_KS(λ) = 2 Σ_{k>=1} (-1)^(k-1) exp(-2 k² λ²)`.

use crate::approx_cdf::{build_cdf, ApproxCdf, CdfPlan};
use crate::error::{domain, state, Error, Result};
use crate::format::g17;
use crate::gk_sketch::QuantileSketch;

/// Result of a two-sample test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub d: f64,
    /// Bound on `|d - D_exact|`; zero for the exact test.
    pub d_error_bound: f64,
    pub p_value: f64,
    pub n: u64,
    pub m: u64,
    pub alpha: f64,
    pub reject: bool,
}

impl KsOutcome {
    fn new(d: f64, d_error_bound: f64, n: u64, m: u64, alpha: f64) -> Result<Self> {
        let d = d.clamp(0.0, 1.0);
        let p_value = p_value(d, n, m)?;
        Ok(KsOutcome {
            d,
            d_error_bound,
            p_value,
            n,
            m,
            alpha,
            reject: p_value <= alpha,
        })
    }

    /// JSON object with keys `d_ks`, `d_error_bound`, `p_value`, `n`, `m`,
    /// `alpha`, `reject`; reals carry 17 significant digits.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"d_ks\":{},\"d_error_bound\":{},\"p_value\":{},\"n\":{},\"m\":{},\"alpha\":{},\"reject\":{}}}",
            g17(self.d),
            g17(self.d_error_bound),
            g17(self.p_value),
            self.n,
            self.m,
            g17(self.alpha),
            self.reject
        )
    }
}

/// Significance level and the precision wanted on the p-value, together with
/// the KS distance precision `phi` they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestPrecision {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub phi: f64,
}

impl TestPrecision {
    /// Derives `phi` from `(alpha, beta)` for sample sizes `n` and `m`.
    pub fn from_alpha_beta(alpha: f64, beta: f64, n: u64, m: u64) -> Result<Self> {
        let phi = phi_for_test(alpha, beta, n, m)?;
        Ok(TestPrecision {
            alpha,
            beta: Some(beta),
            phi,
        })
    }

    /// Uses an explicit KS precision.
    pub fn with_phi(alpha: f64, phi: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(phi > 0.0 && phi < 2.0) {
            return Err(domain(format!("phi must lie in (0, 2), got {phi}")));
        }
        Ok(TestPrecision {
            alpha,
            beta: None,
            phi,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )))
    }
}

fn check_sample(xs: &[f64], name: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(domain(format!("sample {name} is empty")));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sample {name} has non-finite values"
        )));
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_t |F_x(t) - F_y(t)|` over the right-continuous empirical CDFs.
pub fn exact_ks_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_sample(x, "x")?;
    check_sample(y, "y")?;
    Ok(sorted_ks_distance(&sorted(x), &sorted(y)))
}

/// [`exact_ks_distance`] for samples that are already sorted ascending.
pub fn sorted_ks_distance(x: &[f64], y: &[f64]) -> f64 {
    let (n, m) = (x.len(), y.len());
    let (nf, mf) = (n as f64, m as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / nf - j as f64 / mf).abs());
    }
    d
}

/// KS distance between two approximate CDFs, taken over the union of their
/// knots. At a knot the owning CDF contributes its knot probability; tied
/// knots resolve to the largest tied probability, as in [`ApproxCdf::eval`].
pub fn approx_two_sample_ks(cdf1: &ApproxCdf, cdf2: &ApproxCdf) -> f64 {
    cdf1.quantiles()
        .iter()
        .chain(cdf2.quantiles())
        .map(|&x| (cdf1.eval(x) - cdf2.eval(x)).abs())
        .fold(0.0, f64::max)
}

const QKS_MIN_LAMBDA: f64 = 1e-3;
const QKS_MAX_TERMS: u32 = 100;
const QKS_REL_TOL: f64 = 1e-12;

/// Kolmogorov survival function `Q_KS(λ)`.
///
/// Returns 1 for `λ < 1e-3` and whenever the alternating series has not
/// settled after 100 terms.
pub fn qks(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(domain(format!("lambda must be non-negative, got {lambda}")));
    }
    if lambda < QKS_MIN_LAMBDA {
        return Ok(1.0);
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sign = 2.0;
    let mut sum = 0.0;
    for k in 1..=QKS_MAX_TERMS {
        let kf = f64::from(k);
        let term = sign * (a2 * kf * kf).exp();
        sum += term;
        if term.abs() <= QKS_REL_TOL * sum.abs() {
            return Ok(sum.clamp(0.0, 1.0));
        }
        sign = -sign;
    }
    Ok(1.0)
}

/// Asymptotic `P(D > d)` for sample sizes `n` and `m`.
pub fn p_value(d: f64, n: u64, m: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(domain(format!("KS distance must lie in [0, 1], got {d}")));
    }
    if n == 0 || m == 0 {
        return Err(domain("sample sizes must be positive"));
    }
    qks(effective_size(n, m).sqrt() * d)
}

fn effective_size(n: u64, m: u64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    n * m / (n + m)
}

/// Distance whose p-value equals `alpha`, by bisection on `λ ∈ [1e-6, 10]`.
pub fn d_crit(alpha: f64, n: u64, m: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 || m == 0 {
        return Err(domain("sample sizes must be positive"));
    }
    let (mut lo, mut hi) = (1e-6f64, 10.0f64);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let q = qks(mid)?;
        if (q - alpha).abs() <= 1e-10 {
            break;
        }
        if q > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid / effective_size(n, m).sqrt())
}

/// Precision on the KS distance that keeps the p-value within `beta` of
/// `alpha`: the smaller of `|D_crit(α ± β) - D_crit(α)|`.
pub fn phi_for_test(alpha: f64, beta: f64, n: u64, m: u64) -> Result<f64> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(domain(format!("beta must be positive, got {beta}")));
    }
    for level in [alpha, alpha - beta, alpha + beta] {
        if !(level > 0.0 && level < 1.0) {
            return Err(domain(format!(
                "alpha ± beta must stay inside (0, 1); alpha = {alpha}, beta = {beta}"
            )));
        }
    }
    let base = d_crit(alpha, n, m)?;
    let up = (d_crit(alpha + beta, n, m)? - base).abs();
    let down = (d_crit(alpha - beta, n, m)? - base).abs();
    Ok(up.min(down))
}

/// KS distance read directly from two sealed sketches: at every stored value
/// of either sketch the rank is estimated by the midpoint of its bounds.
pub fn lall_ks(sketch1: &QuantileSketch, sketch2: &QuantileSketch) -> Result<f64> {
    for s in [sketch1, sketch2] {
        if !s.is_sealed() {
            return Err(state("sketch-based KS needs sealed sketches"));
        }
        if s.count() == 0 {
            return Err(state("sketch-based KS on an empty sketch"));
        }
    }
    let (n, m) = (sketch1.count() as f64, sketch2.count() as f64);
    let mut d = 0.0f64;
    for t in sketch1.tuples().iter().chain(sketch2.tuples()) {
        let (lo1, hi1) = sketch1.rank_bounds(t.value)?;
        let (lo2, hi2) = sketch2.rank_bounds(t.value)?;
        let f1 = (lo1 + hi1) as f64 / (2.0 * n);
        let f2 = (lo2 + hi2) as f64 / (2.0 * m);
        d = d.max((f1 - f2).abs());
    }
    Ok(d)
}

/// Approximate CDFs of both samples under a precision `phi`, plus the
/// resulting outcome.
#[derive(Debug, Clone)]
pub struct ApproxTest {
    pub outcome: KsOutcome,
    pub cdf_x: ApproxCdf,
    pub cdf_y: ApproxCdf,
}

/// Approximate two-sample KS test: plans both CDFs from `precision.phi`,
/// builds them and compares.
pub fn run_test(x: &[f64], y: &[f64], precision: &TestPrecision) -> Result<KsOutcome> {
    run_test_detailed(x, y, precision).map(|t| t.outcome)
}

/// [`run_test`], keeping the two CDFs.
pub fn run_test_detailed(x: &[f64], y: &[f64], precision: &TestPrecision) -> Result<ApproxTest> {
    check_alpha(precision.alpha)?;
    check_sample(x, "x")?;
    check_sample(y, "y")?;
    let (n, m) = (x.len() as u64, y.len() as u64);
    let plan_x = CdfPlan::from_phi(precision.phi, n)?;
    let plan_y = CdfPlan::from_phi(precision.phi, m)?;
    let (cdf_x, cdf_y) = rayon::join(|| build_cdf(x, plan_x), || build_cdf(y, plan_y));
    let (cdf_x, cdf_y) = (cdf_x?, cdf_y?);
    let d = approx_two_sample_ks(&cdf_x, &cdf_y);
    let outcome = KsOutcome::new(d, plan_x.delta + plan_y.delta, n, m, precision.alpha)?;
    Ok(ApproxTest {
        outcome,
        cdf_x,
        cdf_y,
    })
}

/// Exact two-sample KS test at level `alpha`.
pub fn exact_test(x: &[f64], y: &[f64], alpha: f64) -> Result<KsOutcome> {
    check_alpha(alpha)?;
    let d = exact_ks_distance(x, y)?;
    KsOutcome::new(d, 0.0, x.len() as u64, y.len() as u64, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_distance_examples() {
        assert_eq!(
            exact_ks_distance(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(
            exact_ks_distance(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap(),
            1.0
        );
        assert_eq!(exact_ks_distance(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert!(matches!(
            exact_ks_distance(&[], &[1.0]),
            Err(Error::Domain(_))
        ));
        assert!(exact_ks_distance(&[1.0], &[f64::NAN]).is_err());
    }

    #[test]
    fn qks_limits() {
        assert!(qks(5.0).unwrap() <= 1e-20);
        assert_eq!(qks(1e-6).unwrap(), 1.0);
        assert_eq!(qks(0.0).unwrap(), 1.0);
        assert!(qks(-0.1).is_err());
        assert!(qks(f64::NAN).is_err());
    }

    #[test]
    fn p_value_basics() {
        assert_eq!(p_value(0.0, 10, 10).unwrap(), 1.0);
        assert!(p_value(0.3684, 10_000, 10_000).unwrap() < 1e-100);
        assert!(p_value(1.5, 10, 10).is_err());
        assert!(p_value(0.5, 0, 10).is_err());
    }

    #[test]
    fn d_crit_round_trip_and_order() {
        let (n, m) = (10_000, 10_000);
        let d = d_crit(0.05, n, m).unwrap();
        assert!((p_value(d, n, m).unwrap() - 0.05).abs() <= 1e-8);
        assert!(d_crit(0.01, n, m).unwrap() > d);
        assert!(d > d_crit(0.20, n, m).unwrap());
        assert!(d_crit(0.0, n, m).is_err());
        assert!(d_crit(1.0, n, m).is_err());
    }

    #[test]
    fn phi_domain_and_continuity() {
        assert!(phi_for_test(0.05, 0.06, 100, 100).is_err());
        assert!(phi_for_test(0.95, 0.06, 100, 100).is_err());
        assert!(phi_for_test(0.05, 0.0, 100, 100).is_err());
        assert!(phi_for_test(0.05, 1e-6, 10_000, 10_000).unwrap() < 1e-4);
    }

    // Reference values below were computed independently at 40-digit precision.
    #[test]
    fn qks_reference_value() {
        assert!((qks(1.0).unwrap() - 0.269_999_671_677_354_5).abs() <= 1e-12);
    }

    #[test]
    fn critical_lambda_reference_values() {
        let (n, m) = (1_000_000, 1_000_000);
        let scale = ((n * m) as f64 / (n + m) as f64).sqrt();
        for (alpha, lambda) in [
            (0.01, 1.627_623_611_5),
            (0.05, 1.358_098_639_3),
            (0.10, 1.223_847_870_2),
            (0.20, 1.072_749_174_9),
            (0.50, 0.827_573_555_2),
        ] {
            let got = d_crit(alpha, n, m).unwrap() * scale;
            assert!((got - lambda).abs() <= 1e-8, "alpha {alpha}: {got}");
        }
    }

    #[test]
    fn phi_reference_values() {
        let a = phi_for_test(0.05, 0.025, 10_000, 10_000).unwrap();
        assert!((a - 0.001_086_366_577_408_2).abs() <= 1e-9, "{a}");
        let b = phi_for_test(0.2, 0.1, 84_000, 7_000).unwrap();
        assert!((b - 0.001_240_124_621_1).abs() <= 1e-9, "{b}");
        let c = phi_for_test(0.05, 0.025, 2_000, 2_000).unwrap();
        assert!((c - 0.002_429_189_515_6).abs() <= 1e-9, "{c}");
    }

    #[test]
    fn tiny_p_value_reference_values() {
        let p = p_value(0.0976, 10_000, 10_000).unwrap();
        assert!((p / 8.534_536_818_7e-42 - 1.0).abs() <= 1e-6, "{p:e}");
        let p = p_value(0.0837, 10_000, 10_000).unwrap();
        assert!((p / 7.511_123_562_0e-31 - 1.0).abs() <= 1e-6, "{p:e}");
    }

    #[test]
    fn outcome_json() {
        let o = KsOutcome {
            d: 0.5,
            d_error_bound: 0.0,
            p_value: 0.1,
            n: 2,
            m: 3,
            alpha: 0.05,
            reject: false,
        };
        assert_eq!(
            o.to_json(),
            "{\"d_ks\":0.5,\"d_error_bound\":0,\"p_value\":0.10000000000000001,\"n\":2,\"m\":3,\"alpha\":0.050000000000000003,\"reject\":false}"
        );
    }

    #[test]
    fn approx_distance_of_identical_cdfs_is_zero() {
        // Coarse sketch, many knots: consecutive knots share values.
        let data: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 5003) as f64).collect();
        let plan = CdfPlan::with_knots(5000, 2000, 0.01).unwrap();
        let sketch = QuantileSketch::from_values(0.01, data.iter().copied()).unwrap();
        let cdf = ApproxCdf::from_sketch(&sketch, plan).unwrap();
        assert!(cdf.quantiles().windows(2).any(|w| w[0] == w[1]));
        assert_eq!(approx_two_sample_ks(&cdf, &cdf), 0.0);
        let other = build_cdf(&data, CdfPlan::with_knots(5000, 300, 0.001).unwrap()).unwrap();
        assert_eq!(
            approx_two_sample_ks(&cdf, &other),
            approx_two_sample_ks(&other, &cdf)
        );
    }

    #[test]
    fn lall_requires_sealed() {
        let mut open = QuantileSketch::new(0.1).unwrap();
        open.insert(1.0).unwrap();
        let sealed = QuantileSketch::from_values(0.1, [1.0, 2.0]).unwrap();
        assert!(matches!(lall_ks(&open, &sealed), Err(Error::State(_))));
        let mut empty = QuantileSketch::new(0.1).unwrap();
        empty.seal();
        assert!(matches!(lall_ks(&sealed, &empty), Err(Error::State(_))));
    }

    #[test]
    fn lall_self_comparison() {
        let data: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 2003) as f64).collect();
        let a = QuantileSketch::from_values(0.01, data.iter().copied()).unwrap();
        let b = QuantileSketch::from_values(0.01, data.iter().copied()).unwrap();
        assert!(lall_ks(&a, &b).unwrap() <= 2.0 * 0.01 + 2.0 / 2000.0);
    }
}
