//! Data ingestion and the seeded experiment harness.
//!
//! Experiments 1-5 are described by a significance level and a p-value
//! precision. At their table sizes they run with a fixed KS precision
//! (0.000399 for 1-3, 0.00077 for 4-5); at any other size the precision is
//! derived from `(alpha, beta)`. Experiments 6-10 take a target precision
//! directly and also run the sketch-based KS with `ε = precision / 6`. Replication `r`
//! uses seed `master_seed + r`; the two samples of a replication come from
//! streams 0 and 1 of that seed.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::approx_cdf::{build_cdf, ApproxCdf, CdfPlan, EmpiricalCdf};
use crate::error::{domain, Error, Result};
use crate::format::{g17, p_value as fmt_p};
use crate::gk_sketch::QuantileSketch;
use crate::ks::{exact_test, lall_ks, run_test_detailed, TestPrecision};
use crate::synth::{sample_stream, DistributionSpec};

pub const DEFAULT_REPLICATIONS: usize = 20;
pub const DEFAULT_SEED: u64 = 20_230_801;

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub skip_header: bool,
    pub skip_invalid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub values: Vec<f64>,
    /// Lines dropped because they did not hold a finite number.
    pub skipped: usize,
}

/// Reads newline-delimited decimals. Blank lines are ignored.
pub fn ingest(path: &Path, options: IngestOptions) -> Result<Ingested> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    let mut skipped = 0;
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 && options.skip_header {
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if options.skip_invalid => skipped += 1,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    text: line.to_string(),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(domain(format!("{} holds no values", path.display())));
    }
    Ok(Ingested { values, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestParams {
    /// Precision derived from significance `alpha` and p-value precision `beta`.
    AlphaBeta { alpha: f64, beta: f64 },
    /// Explicit target precision on the KS distance; `alpha` only drives the
    /// reject decision.
    Precision { alpha: f64, precision: f64 },
}

impl TestParams {
    pub fn alpha(&self) -> f64 {
        match *self {
            TestParams::AlphaBeta { alpha, .. } | TestParams::Precision { alpha, .. } => alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: u32,
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
    pub n: usize,
    pub m: usize,
    pub params: TestParams,
    /// Fixed KS precision used instead of deriving it from
    /// `(alpha, beta)`; cleared when the sample sizes change.
    pub pinned_phi: Option<f64>,
    pub replications: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    /// The synthetic configurations 1-10.
    pub fn table(id: u32) -> Result<Self> {
        let normal = |mu, sd| DistributionSpec::Normal {
            mean: mu,
            std_dev: sd,
        };
        let gamma = DistributionSpec::Gamma {
            shape: 0.5,
            scale: 1.0,
        };
        let uniform = DistributionSpec::Uniform {
            lower: 0.0,
            upper: 1.0,
        };
        let ab = |alpha, beta| TestParams::AlphaBeta { alpha, beta };
        let prec = |precision| TestParams::Precision {
            alpha: 0.05,
            precision,
        };
        let pinned_phi = match id {
            1..=3 => Some(0.000399),
            4 | 5 => Some(2.0 * 0.000385),
            _ => None,
        };
        let (dist1, dist2, n, m, params) = match id {
            1 => (
                normal(0.0, 1.0),
                normal(1.0, 1.0),
                10_000,
                10_000,
                ab(0.05, 0.025),
            ),
            2 => (
                normal(0.0, 1.0),
                normal(0.0, 2.0),
                10_000,
                10_000,
                ab(0.05, 0.025),
            ),
            3 => (
                normal(0.0, 1.0),
                normal(0.0, 1.0),
                10_000,
                10_000,
                ab(0.05, 0.025),
            ),
            4 => (gamma, uniform, 84_000, 7_000, ab(0.20, 0.1)),
            5 => (gamma, gamma, 84_000, 7_000, ab(0.20, 0.1)),
            6 => (
                normal(0.0, 1.0),
                normal(1.0, 1.0),
                10_000,
                10_000,
                prec(0.05),
            ),
            7 => (
                normal(0.0, 1.0),
                normal(0.0, 2.0),
                10_000,
                10_000,
                prec(0.01),
            ),
            8 => (
                normal(0.0, 1.0),
                normal(0.0, 1.0),
                100_000,
                100_000,
                prec(0.001),
            ),
            9 => (gamma, uniform, 84_000, 84_000, prec(0.05)),
            10 => (gamma, gamma, 84_000, 84_000, prec(0.002)),
            _ => return Err(domain(format!("experiment id must be 1-10, got {id}"))),
        };
        Ok(ExperimentSpec {
            id,
            dist1,
            dist2,
            n,
            m,
            params,
            pinned_phi,
            replications: DEFAULT_REPLICATIONS,
            master_seed: DEFAULT_SEED,
        })
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Overrides the sample sizes. The precision of `(alpha, beta)`
    /// configurations is then derived for the new sizes.
    pub fn with_sizes(mut self, n: usize, m: usize) -> Self {
        self.n = n;
        self.m = m;
        self.pinned_phi = None;
        self
    }

    /// Test precision for this configuration.
    pub fn precision(&self) -> Result<TestPrecision> {
        match self.params {
            TestParams::AlphaBeta { alpha, beta } => match self.pinned_phi {
                Some(phi) => Ok(TestPrecision {
                    alpha,
                    beta: Some(beta),
                    phi,
                }),
                None => TestPrecision::from_alpha_beta(alpha, beta, self.n as u64, self.m as u64),
            },
            TestParams::Precision { alpha, precision } => TestPrecision::with_phi(alpha, precision),
        }
    }

    /// Error of the sketches handed to the sketch-based KS, when it runs.
    pub fn sketch_epsilon(&self) -> Option<f64> {
        match self.params {
            TestParams::Precision { precision, .. } => Some(precision / 6.0),
            TestParams::AlphaBeta { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    pub d_exact: f64,
    pub d_approx: f64,
    pub d_sketch: Option<f64>,
    pub p_exact: f64,
    pub p_approx: f64,
    pub reject_exact: bool,
    pub reject_approx: bool,
    pub cdf_size_x: usize,
    pub cdf_size_y: usize,
    pub sketch_size_x: Option<usize>,
    pub sketch_size_y: Option<usize>,
}

impl ReplicationRecord {
    pub fn abs_error(&self) -> f64 {
        (self.d_approx - self.d_exact).abs()
    }
}

/// Min/max summaries over the replications.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub d_exact: (f64, f64),
    pub d_approx: (f64, f64),
    pub d_sketch: Option<(f64, f64)>,
    pub p_exact: (f64, f64),
    pub p_approx: (f64, f64),
    pub max_abs_error: f64,
    pub max_abs_error_sketch: Option<f64>,
    pub rejections_exact: usize,
    pub rejections_approx: usize,
    /// Replications where the exact and approximate decisions agree.
    pub agreements: usize,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

impl Aggregates {
    pub fn from_records(records: &[ReplicationRecord]) -> Self {
        let sketch: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| r.d_sketch.map(|d| (d, r.d_exact)))
            .collect();
        let has_sketch = !sketch.is_empty();
        Aggregates {
            d_exact: min_max(records.iter().map(|r| r.d_exact)),
            d_approx: min_max(records.iter().map(|r| r.d_approx)),
            d_sketch: has_sketch.then(|| min_max(sketch.iter().map(|s| s.0))),
            p_exact: min_max(records.iter().map(|r| r.p_exact)),
            p_approx: min_max(records.iter().map(|r| r.p_approx)),
            max_abs_error: records.iter().map(|r| r.abs_error()).fold(0.0, f64::max),
            max_abs_error_sketch: has_sketch.then(|| {
                sketch
                    .iter()
                    .map(|(s, e)| (s - e).abs())
                    .fold(0.0, f64::max)
            }),
            rejections_exact: records.iter().filter(|r| r.reject_exact).count(),
            rejections_approx: records.iter().filter(|r| r.reject_approx).count(),
            agreements: records
                .iter()
                .filter(|r| r.reject_exact == r.reject_approx)
                .count(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub precision: TestPrecision,
    pub plan_x: CdfPlan,
    pub plan_y: CdfPlan,
    pub records: Vec<ReplicationRecord>,
    pub aggregates: Aggregates,
}

const CSV_HEADER: &str = "replication,seed,d_exact,d_approx,abs_error,p_exact,p_approx,\
reject_exact,reject_approx,d_sketch,cdf_size_x,cdf_size_y,sketch_size_x,sketch_size_y";

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl ExperimentResult {
    /// Half of the bound on `|d_approx - d_exact|`.
    pub fn delta(&self) -> f64 {
        self.precision.phi / 2.0
    }

    /// Per-replication rows followed by one `aggregate` row holding the
    /// maxima of the distance columns, the minima of the p-value columns and
    /// the rejection counts.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.index,
                r.seed,
                g17(r.d_exact),
                g17(r.d_approx),
                g17(r.abs_error()),
                fmt_p(r.p_exact),
                fmt_p(r.p_approx),
                r.reject_exact,
                r.reject_approx,
                opt(r.d_sketch, g17),
                r.cdf_size_x,
                r.cdf_size_y,
                opt(r.sketch_size_x, |s| s.to_string()),
                opt(r.sketch_size_y, |s| s.to_string()),
            )?;
        }
        let a = &self.aggregates;
        let first = self.records.first();
        writeln!(
            w,
            "aggregate,{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.spec.master_seed,
            g17(a.d_exact.1),
            g17(a.d_approx.1),
            g17(a.max_abs_error),
            fmt_p(a.p_exact.0),
            fmt_p(a.p_approx.0),
            a.rejections_exact,
            a.rejections_approx,
            opt(a.d_sketch, |d| g17(d.1)),
            self.plan_x.a,
            self.plan_y.a,
            opt(first.and_then(|r| r.sketch_size_x), |s| s.to_string()),
            opt(first.and_then(|r| r.sketch_size_y), |s| s.to_string()),
        )
    }

    /// `metric,value` rows with the parameters and every aggregate.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let a = &self.aggregates;
        let s = &self.spec;
        let mut rows: Vec<(&str, String)> = vec![
            ("experiment", s.id.to_string()),
            ("sample_1", s.dist1.to_string()),
            ("sample_2", s.dist2.to_string()),
            ("n", s.n.to_string()),
            ("m", s.m.to_string()),
            ("alpha", g17(self.precision.alpha)),
            ("beta", opt(self.precision.beta, g17)),
            ("phi", g17(self.precision.phi)),
            ("delta", g17(self.delta())),
            ("epsilon_x", g17(self.plan_x.epsilon)),
            ("epsilon_y", g17(self.plan_y.epsilon)),
            ("cdf_size_x", self.plan_x.a.to_string()),
            ("cdf_size_y", self.plan_y.a.to_string()),
            ("sketch_epsilon", opt(s.sketch_epsilon(), g17)),
            ("replications", s.replications.to_string()),
            ("master_seed", s.master_seed.to_string()),
            ("d_exact_min", g17(a.d_exact.0)),
            ("d_exact_max", g17(a.d_exact.1)),
            ("d_approx_min", g17(a.d_approx.0)),
            ("d_approx_max", g17(a.d_approx.1)),
            ("max_abs_error", g17(a.max_abs_error)),
            ("p_exact_min", fmt_p(a.p_exact.0)),
            ("p_exact_max", fmt_p(a.p_exact.1)),
            ("p_approx_min", fmt_p(a.p_approx.0)),
            ("p_approx_max", fmt_p(a.p_approx.1)),
            ("rejections_exact", a.rejections_exact.to_string()),
            ("rejections_approx", a.rejections_approx.to_string()),
            ("agreements", a.agreements.to_string()),
        ];
        if let Some((lo, hi)) = a.d_sketch {
            rows.push(("d_sketch_min", g17(lo)));
            rows.push(("d_sketch_max", g17(hi)));
            rows.push(("max_abs_error_sketch", opt(a.max_abs_error_sketch, g17)));
        }
        if let Some(r) = self.records.first() {
            rows.push(("sketch_size_x", opt(r.sketch_size_x, |v| v.to_string())));
            rows.push(("sketch_size_y", opt(r.sketch_size_y, |v| v.to_string())));
        }
        writeln!(w, "metric,value")?;
        for (k, v) in rows {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    }
}

fn run_replication(
    spec: &ExperimentSpec,
    precision: &TestPrecision,
    index: usize,
) -> Result<ReplicationRecord> {
    let seed = spec.master_seed.wrapping_add(index as u64);
    let x = sample_stream(&spec.dist1, spec.n, seed, 0)?;
    let y = sample_stream(&spec.dist2, spec.m, seed, 1)?;
    let exact = exact_test(&x, &y, precision.alpha)?;
    let approx = run_test_detailed(&x, &y, precision)?;
    let (d_sketch, sketch_size_x, sketch_size_y) = match spec.sketch_epsilon() {
        Some(eps) => {
            let sx = QuantileSketch::from_values(eps, x.iter().copied())?;
            let sy = QuantileSketch::from_values(eps, y.iter().copied())?;
            (Some(lall_ks(&sx, &sy)?), Some(sx.len()), Some(sy.len()))
        }
        None => (None, None, None),
    };
    Ok(ReplicationRecord {
        index,
        seed,
        d_exact: exact.d,
        d_approx: approx.outcome.d,
        d_sketch,
        p_exact: exact.p_value,
        p_approx: approx.outcome.p_value,
        reject_exact: exact.reject,
        reject_approx: approx.outcome.reject,
        cdf_size_x: approx.cdf_x.len(),
        cdf_size_y: approx.cdf_y.len(),
        sketch_size_x,
        sketch_size_y,
    })
}

/// Runs every replication of `spec`; rows come back in replication order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.replications == 0 {
        return Err(domain("at least one replication is required"));
    }
    let precision = spec.precision()?;
    let plan_x = CdfPlan::from_phi(precision.phi, spec.n as u64)?;
    let plan_y = CdfPlan::from_phi(precision.phi, spec.m as u64)?;
    let records = (0..spec.replications)
        .into_par_iter()
        .map(|i| run_replication(spec, &precision, i))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = Aggregates::from_records(&records);
    Ok(ExperimentResult {
        spec: spec.clone(),
        precision,
        plan_x,
        plan_y,
        records,
        aggregates,
    })
}

/// `(a, ε)` pairs of the convergence study.
pub const CONVERGENCE_GRID: [(usize, f64); 9] = [
    (11, 0.1),
    (21, 0.1),
    (51, 0.1),
    (11, 0.01),
    (21, 0.01),
    (51, 0.01),
    (101, 0.001),
    (201, 0.001),
    (501, 0.001),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub a: usize,
    pub epsilon: f64,
    /// Certified bound `1/(a-1) + ε`.
    pub delta: f64,
    /// Worst `|F̂ - F_N|` over all sample points of all replications.
    pub max_abs_error: f64,
}

impl ConvergenceRow {
    pub fn within_bound(&self) -> bool {
        self.max_abs_error <= self.delta
    }
}

/// Convergence study: for each grid row plus an exact row `(a = n, ε = 0)`,
/// the worst CDF error over `replications` standard-normal samples of size `n`.
pub fn run_convergence(
    n: usize,
    replications: usize,
    master_seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if replications == 0 {
        return Err(domain("at least one replication is required"));
    }
    let mut grid: Vec<(usize, f64)> = CONVERGENCE_GRID.to_vec();
    grid.push((n, 0.0));
    let plans = grid
        .iter()
        .map(|&(a, eps)| CdfPlan::with_knots(n as u64, a, eps))
        .collect::<Result<Vec<_>>>()?;
    let normal = DistributionSpec::Normal {
        mean: 0.0,
        std_dev: 1.0,
    };

    let per_rep = (0..replications)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let data = sample_stream(&normal, n, master_seed.wrapping_add(r as u64), 0)?;
            let exact = EmpiricalCdf::new(&data)?;
            let mut sketches: Vec<QuantileSketch> = Vec::new();
            plans
                .iter()
                .map(|plan| {
                    let cdf = if plan.epsilon == 0.0 {
                        build_cdf(&data, *plan)?
                    } else {
                        let pos = match sketches.iter().position(|s| s.epsilon() == plan.epsilon) {
                            Some(p) => p,
                            None => {
                                sketches.push(QuantileSketch::from_values(
                                    plan.epsilon,
                                    data.iter().copied(),
                                )?);
                                sketches.len() - 1
                            }
                        };
                        ApproxCdf::from_sketch(&sketches[pos], *plan)?
                    };
                    Ok(exact.max_abs_error(&cdf))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(plans
        .iter()
        .enumerate()
        .map(|(i, plan)| ConvergenceRow {
            a: plan.a,
            epsilon: plan.epsilon,
            delta: plan.error_bound(),
            max_abs_error: per_rep.iter().map(|errs| errs[i]).fold(0.0, f64::max),
        })
        .collect())
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> io::Result<()> {
    writeln!(w, "a,epsilon,delta,max_abs_error,within_bound")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.a,
            g17(r.epsilon),
            g17(r.delta),
            g17(r.max_abs_error),
            r.within_bound()
        )?;
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
{
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = io::BufWriter::new(file);
    f(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// `dir/stem<suffix>` next to `path`, e.g. `out.csv` -> `out.summary.csv`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}
