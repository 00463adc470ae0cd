//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::approx_cdf::{build_cdf, CdfPlan, EmpiricalCdf};
use crate::error::{domain, Error, Result};
use crate::format::g17;
use crate::harness::{
    ingest, run_convergence, run_experiment, sibling_path, write_convergence_csv, write_file,
    ExperimentResult, ExperimentSpec, IngestOptions, DEFAULT_REPLICATIONS, DEFAULT_SEED,
};
use crate::ks::{run_test_detailed, ApproxTest, TestPrecision};

/// Exit status of `ks2 --exit-on-reject` when the null hypothesis is rejected.
pub const EXIT_REJECT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sketchks",
    version,
    about = "Approximate two-sample KS tests from quantile sketches"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate two-sample KS test between two files; prints JSON.
    Ks2(Ks2Args),
    /// Run one of the seeded synthetic experiments 1-10.
    Experiment(ExperimentArgs),
    /// Run a sketch-comparison experiment (ids 6-10).
    LallCompare(ExperimentArgs),
    /// CDF approximation error study on standard-normal samples.
    Convergence(ConvergenceArgs),
    /// Write the knots of an approximate CDF.
    Cdf(CdfArgs),
}

#[derive(Debug, Args, Clone, Copy)]
pub struct InputArgs {
    /// Ignore the first line of each input file.
    #[arg(long)]
    pub skip_header: bool,
    /// Drop lines that do not hold a finite number instead of failing.
    #[arg(long)]
    pub skip_invalid: bool,
}

impl From<InputArgs> for IngestOptions {
    fn from(a: InputArgs) -> Self {
        IngestOptions {
            skip_header: a.skip_header,
            skip_invalid: a.skip_invalid,
        }
    }
}

#[derive(Debug, Args)]
pub struct Ks2Args {
    #[arg(long)]
    pub file_x: PathBuf,
    #[arg(long)]
    pub file_y: PathBuf,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Precision wanted on the p-value; derives phi.
    #[arg(long, conflicts_with = "phi", required_unless_present = "phi")]
    pub beta: Option<f64>,
    /// Explicit precision on the KS distance.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Exit with status 2 when the null hypothesis is rejected.
    #[arg(long)]
    pub exit_on_reject: bool,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub id: u32,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub replications: usize,
    #[arg(long, env = "SKETCHKS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Per-replication CSV; a `<stem>.summary.csv` is written beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the first sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Override the second sample size.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub replications: usize,
    #[arg(long, env = "SKETCHKS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Points per sample.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct CdfArgs {
    #[arg(long)]
    pub file_x: PathBuf,
    /// CDF error bound.
    #[arg(long, conflicts_with = "phi", required_unless_present = "phi")]
    pub delta: Option<f64>,
    /// KS precision; the CDF gets half of it.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full empirical CDF to `<stem>_exact.csv`.
    #[arg(long)]
    pub with_exact: bool,
    #[command(flatten)]
    pub input: InputArgs,
}

/// Runs a parsed command, writing human/JSON output to `stdout`. Returns the
/// process exit status on success.
pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<i32> {
    match cli.command {
        Command::Ks2(args) => cmd_ks2(&args, stdout),
        Command::Experiment(args) => cmd_experiment(&args, false, stdout).map(|_| 0),
        Command::LallCompare(args) => cmd_experiment(&args, true, stdout).map(|_| 0),
        Command::Convergence(args) => cmd_convergence(&args, stdout),
        Command::Cdf(args) => cmd_cdf(&args, stdout).map(|_| 0),
    }
}

fn out_err(source: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn load(path: &Path, input: InputArgs) -> Result<Vec<f64>> {
    let got = ingest(path, input.into())?;
    if got.skipped > 0 {
        eprintln!(
            "{}: skipped {} invalid line(s)",
            path.display(),
            got.skipped
        );
    }
    Ok(got.values)
}

/// Outcome JSON extended with a `params` object describing both CDFs.
pub fn ks2_json(test: &ApproxTest, precision: &TestPrecision) -> String {
    let outcome = test.outcome.to_json();
    let (px, py) = (test.cdf_x.plan(), test.cdf_y.plan());
    let params = format!(
        "{{\"phi\":{},\"beta\":{},\"delta_x\":{},\"epsilon_x\":{},\"a_x\":{},\"delta_y\":{},\"epsilon_y\":{},\"a_y\":{}}}",
        g17(precision.phi),
        precision.beta.map_or_else(|| "null".to_string(), g17),
        g17(px.delta),
        g17(px.epsilon),
        px.a,
        g17(py.delta),
        g17(py.epsilon),
        py.a
    );
    format!("{},\"params\":{params}}}", &outcome[..outcome.len() - 1])
}

pub fn cmd_ks2<W: Write>(args: &Ks2Args, stdout: &mut W) -> Result<i32> {
    let x = load(&args.file_x, args.input)?;
    let y = load(&args.file_y, args.input)?;
    let precision = match (args.beta, args.phi) {
        (_, Some(phi)) => TestPrecision::with_phi(args.alpha, phi)?,
        (Some(beta), None) => {
            TestPrecision::from_alpha_beta(args.alpha, beta, x.len() as u64, y.len() as u64)?
        }
        (None, None) => return Err(domain("either --beta or --phi is required")),
    };
    let test = run_test_detailed(&x, &y, &precision)?;
    writeln!(stdout, "{}", ks2_json(&test, &precision)).map_err(out_err)?;
    Ok(if args.exit_on_reject && test.outcome.reject {
        EXIT_REJECT
    } else {
        0
    })
}

pub fn cmd_experiment<W: Write>(
    args: &ExperimentArgs,
    sketch_only: bool,
    stdout: &mut W,
) -> Result<ExperimentResult> {
    if sketch_only && !(6..=10).contains(&args.id) {
        return Err(domain(format!(
            "lall-compare takes experiment ids 6-10, got {}",
            args.id
        )));
    }
    let mut spec = ExperimentSpec::table(args.id)?
        .with_replications(args.replications)
        .with_seed(args.seed);
    if args.n.is_some() || args.m.is_some() {
        let (n, m) = (args.n.unwrap_or(spec.n), args.m.unwrap_or(spec.m));
        spec = spec.with_sizes(n, m);
    }
    let result = run_experiment(&spec)?;
    write_file(&args.out, |w| result.write_csv(w))?;
    write_file(&sibling_path(&args.out, ".summary.csv"), |w| {
        result.write_summary_csv(w)
    })?;

    let a = &result.aggregates;
    let mut report = format!(
        "experiment {}: {} vs {}, n={}, m={}, phi={}, cdf sizes {}/{}\n\
         d_exact [{}, {}]  d_approx [{}, {}]  max|err| {} (bound {})\n\
         rejections exact {}/{}  approx {}/{}  agreements {}\n",
        spec.id,
        spec.dist1,
        spec.dist2,
        spec.n,
        spec.m,
        g17(result.precision.phi),
        result.plan_x.a,
        result.plan_y.a,
        g17(a.d_exact.0),
        g17(a.d_exact.1),
        g17(a.d_approx.0),
        g17(a.d_approx.1),
        g17(a.max_abs_error),
        g17(result.precision.phi),
        a.rejections_exact,
        spec.replications,
        a.rejections_approx,
        spec.replications,
        a.agreements,
    );
    if let (Some((lo, hi)), Some(r)) = (a.d_sketch, result.records.first()) {
        report.push_str(&format!(
            "d_sketch [{}, {}]  sketch sizes {}/{}\n",
            g17(lo),
            g17(hi),
            r.sketch_size_x.unwrap_or(0),
            r.sketch_size_y.unwrap_or(0),
        ));
    }
    stdout.write_all(report.as_bytes()).map_err(out_err)?;
    Ok(result)
}

/// Returns exit status 1 when any row exceeds its bound.
pub fn cmd_convergence<W: Write>(args: &ConvergenceArgs, stdout: &mut W) -> Result<i32> {
    let rows = run_convergence(args.n, args.replications, args.seed)?;
    write_file(&args.out, |w| write_convergence_csv(&rows, w))?;
    let mut status = 0;
    for r in &rows {
        writeln!(
            stdout,
            "a={:<6} eps={:<6} delta={:<10.6} max|error|={:.6} {}",
            r.a,
            r.epsilon,
            r.delta,
            r.max_abs_error,
            if r.within_bound() {
                "ok"
            } else {
                "EXCEEDS BOUND"
            }
        )
        .map_err(out_err)?;
        if !r.within_bound() {
            status = 1;
        }
    }
    Ok(status)
}

pub fn cmd_cdf<W: Write>(args: &CdfArgs, stdout: &mut W) -> Result<CdfPlan> {
    let data = load(&args.file_x, args.input)?;
    let n = data.len() as u64;
    let plan = match (args.delta, args.phi) {
        (_, Some(phi)) => CdfPlan::from_phi(phi, n)?,
        (Some(delta), None) => CdfPlan::from_delta(delta, n)?,
        (None, None) => return Err(domain("either --delta or --phi is required")),
    };
    let cdf = build_cdf(&data, plan)?;
    write_file(&args.out, |w| cdf.write_csv(w))?;
    if args.with_exact {
        let exact = EmpiricalCdf::new(&data)?;
        write_file(&sibling_path(&args.out, "_exact.csv"), |w| {
            exact.write_csv(w)
        })?;
    }
    writeln!(
        stdout,
        "n={} delta={} epsilon={} knots={}",
        n,
        g17(plan.delta),
        g17(plan.epsilon),
        plan.a
    )
    .map_err(out_err)?;
    Ok(plan)
}
