//! Acceptance suite. Each test prints one `[PASS]` or `[FAIL]` line per
//! criterion item, then fails if any item failed. Run with
//! `cargo test -p sketchks --test acceptance -- --nocapture` to see the report.

mod common;

use std::fs;
use std::sync::OnceLock;

use sketchks::approx_cdf::{plan_from_phi, EmpiricalCdf};
use sketchks::cli::{self, Cli, ExperimentArgs};
use sketchks::harness::{
    run_convergence, run_experiment, ExperimentResult, ExperimentSpec, DEFAULT_SEED,
};
use sketchks::ks::{d_crit, exact_ks_distance, p_value, phi_for_test, qks};
use sketchks::synth::{sample, sample_stream};
use sketchks::{build_cdf, CdfPlan, DistributionSpec, QuantileSketch};

use common::{brute_force_ks, satisfies_rank_guarantee};

struct Report {
    criterion: u32,
    failures: Vec<String>,
}

impl Report {
    fn new(criterion: u32) -> Self {
        Report {
            criterion,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, pass: bool, what: impl Into<String>) {
        let what = what.into();
        println!(
            "[{}] criterion {}: {what}",
            if pass { "PASS" } else { "FAIL" },
            self.criterion
        );
        if !pass {
            self.failures.push(what);
        }
    }

    fn soft(&self, pass: bool, what: impl AsRef<str>) {
        println!(
            "[{}] criterion {} (soft): {}",
            if pass { "PASS" } else { "WARN" },
            self.criterion,
            what.as_ref()
        );
    }

    fn finish(self) {
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {:?}",
            self.criterion,
            self.failures
        );
    }
}

fn full_scale_first_table() -> &'static [ExperimentResult] {
    static RESULTS: OnceLock<Vec<ExperimentResult>> = OnceLock::new();
    RESULTS.get_or_init(|| {
        (1..=5)
            .map(|id| run_experiment(&ExperimentSpec::table(id).unwrap()).unwrap())
            .collect()
    })
}

#[test]
fn criterion_1_convergence() {
    let mut r = Report::new(1);
    let rows = run_convergence(10_000, 20, DEFAULT_SEED).unwrap();
    r.check(
        rows.len() == 10,
        format!("{} rows (9 grid rows plus the exact row)", rows.len()),
    );
    for row in &rows {
        r.check(
            row.within_bound(),
            format!(
                "a={} eps={} max|error|={:.6} <= delta={:.6}",
                row.a, row.epsilon, row.max_abs_error, row.delta
            ),
        );
    }
    r.finish();
}

#[test]
fn criterion_2_cdf_sizes() {
    let mut r = Report::new(2);
    for (id, precision, n, size) in [
        (6, 0.05, 10_000, 634),
        (7, 0.01, 10_000, 1416),
        (8, 0.001, 100_000, 14144),
        (9, 0.05, 84_000, 1835),
        (10, 0.002, 84_000, 9167),
    ] {
        let plan = plan_from_phi(precision, n).unwrap();
        r.check(
            plan.a == size,
            format!("experiment {id}: cdf size {} == {size}", plan.a),
        );
    }
    r.finish();
}

#[test]
fn criterion_2_eps45_values() {
    let mut r = Report::new(2);
    for (id, precision, n, reported) in [
        (6, 0.05, 10_000, 0.02341),
        (7, 0.01, 10_000, 0.004293),
        (8, 0.001, 100_000, 0.000429),
        (9, 0.05, 84_000, 0.02445),
        (10, 0.002, 84_000, 0.000892),
    ] {
        let eps = plan_from_phi(precision, n).unwrap().epsilon;
        r.check(
            (eps - reported).abs() <= 2e-6,
            format!(
                "experiment {id}: eps45 {eps:.7} vs {reported} (|diff| {:.1e} <= 2e-6)",
                (eps - reported).abs()
            ),
        );
    }
    r.finish();
}

#[test]
fn criterion_2_pinned_knot_counts() {
    let mut r = Report::new(2);
    for (phi, n, reported) in [(0.000399, 10_000, 7083usize), (0.00077, 84_000, 14770)] {
        let plan = plan_from_phi(phi, n).unwrap();
        r.check(
            plan.a.abs_diff(reported) <= 3,
            format!(
                "phi={phi} N={n}: a={} within 3 of {reported} (eps {:.7})",
                plan.a, plan.epsilon
            ),
        );
    }
    r.finish();
}

#[test]
fn criterion_3_distance_bound_full_scale() {
    let mut r = Report::new(3);
    for res in full_scale_first_table() {
        let worst = res
            .records
            .iter()
            .map(|x| x.abs_error())
            .fold(0.0, f64::max);
        r.check(
            res.records
                .iter()
                .all(|x| x.abs_error() <= res.precision.phi),
            format!(
                "experiment {} (n={}, m={}): max|D^-D| {:.6} <= {} over {} replications",
                res.spec.id,
                res.spec.n,
                res.spec.m,
                worst,
                res.precision.phi,
                res.records.len()
            ),
        );
    }
    r.finish();
}

#[test]
fn criterion_3_distance_bound_desk_scale() {
    let mut r = Report::new(3);
    for id in 1..=5 {
        let spec = ExperimentSpec::table(id).unwrap().with_sizes(2000, 2000);
        let res = run_experiment(&spec).unwrap();
        r.check(
            res.records
                .iter()
                .all(|x| x.abs_error() <= res.precision.phi),
            format!(
                "experiment {id} at N=M=2000: max|D^-D| {:.6} <= derived phi {:.6}",
                res.aggregates.max_abs_error, res.precision.phi
            ),
        );
    }
    r.finish();
}

#[test]
fn criterion_4_decisions() {
    let mut r = Report::new(4);
    let results = full_scale_first_table();
    for res in results {
        let a = &res.aggregates;
        let reps = res.records.len();
        match res.spec.id {
            1 | 2 | 4 => r.check(
                a.rejections_exact == reps && a.rejections_approx == reps,
                format!(
                    "experiment {}: rejections exact {}/{reps}, approx {}/{reps} (all required)",
                    res.spec.id, a.rejections_exact, a.rejections_approx
                ),
            ),
            3 => r.check(
                a.rejections_exact <= 3 && a.rejections_approx <= 3,
                format!(
                    "experiment 3: rejections exact {}/{reps}, approx {}/{reps} (at most 3)",
                    a.rejections_exact, a.rejections_approx
                ),
            ),
            5 => r.check(
                a.agreements >= 19,
                format!(
                    "experiment 5: decisions agree in {}/{reps} (at least 19)",
                    a.agreements
                ),
            ),
            _ => unreachable!(),
        }
    }
    r.finish();
}

#[test]
fn criterion_5_sketch_distance() {
    let mut r = Report::new(5);
    for id in 6..=10 {
        let res = run_experiment(&ExperimentSpec::table(id).unwrap()).unwrap();
        let precision = res.precision.phi;
        let worst = res.aggregates.max_abs_error_sketch.unwrap();
        r.check(
            res.records
                .iter()
                .all(|x| (x.d_sketch.unwrap() - x.d_exact).abs() <= precision),
            format!("experiment {id}: max|D_sketch-D| {worst:.6} <= {precision}"),
        );
        let tuples = res
            .records
            .iter()
            .map(|x| x.sketch_size_x.unwrap().max(x.sketch_size_y.unwrap()))
            .max()
            .unwrap();
        let knots = res.plan_x.a.min(res.plan_y.a);
        let line = format!("experiment {id}: sketch tuples {tuples} vs cdf knots {knots}");
        if matches!(id, 6 | 8 | 10) {
            r.soft(tuples < knots, format!("{line} (fewer tuples than knots)"));
        } else {
            println!("[INFO] criterion 5: {line}");
        }
    }
    r.finish();
}

#[test]
fn criterion_6_properties() {
    let mut r = Report::new(6);
    let mut rng = common::rng(6);

    let mut rank_ok = true;
    for trial in 0..60u64 {
        let eps = [0.1, 0.01, 0.001][(trial % 3) as usize];
        let n = 1 + (trial as usize * 997) % 5000;
        let values = if trial % 2 == 0 {
            sample(&DistributionSpec::normal(0.0, 1.0).unwrap(), n, trial).unwrap()
        } else {
            common::tied_values(&mut rng, n, 25)
        };
        let sketch = QuantileSketch::from_values(eps, values.iter().copied()).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for k in 1..=100 {
            let p = k as f64 / 100.0;
            let v = sketch.query_quantile(p).unwrap();
            rank_ok &= satisfies_rank_guarantee(&sorted, v, p.max(1.0 / n as f64), eps);
        }
    }
    r.check(
        rank_ok,
        "rank guarantee over 60 randomized streams, eps in {0.1, 0.01, 0.001}",
    );

    let mut worst_ratio = 0.0f64;
    for trial in 0..60u64 {
        let n = 50 + (trial as usize * 331) % 5000;
        let eps = [0.0, 0.001, 0.01, 0.05][(trial % 4) as usize];
        let a = 3 + (trial as usize * 53) % (n - 3);
        let plan = CdfPlan::with_knots(n as u64, a, eps).unwrap();
        let data = sample(&DistributionSpec::gamma(0.5, 1.0).unwrap(), n, 100 + trial).unwrap();
        let cdf = build_cdf(&data, plan).unwrap();
        let err = EmpiricalCdf::new(&data).unwrap().max_abs_error(&cdf);
        worst_ratio = worst_ratio.max(err / plan.error_bound());
    }
    r.check(
        worst_ratio <= 1.0 + 1e-12,
        format!(
            "cdf error within bound over 60 randomized plans (worst error/bound {worst_ratio:.3})"
        ),
    );

    let mut ks_ok = true;
    for trial in 0..200u64 {
        let n = 1 + (trial as usize * 7) % 200;
        let m = 1 + (trial as usize * 13) % 200;
        let (x, y) = if trial % 2 == 0 {
            (
                common::tied_values(&mut rng, n, 12),
                common::tied_values(&mut rng, m, 12),
            )
        } else {
            let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
            (
                sample_stream(&spec, n, trial, 0).unwrap(),
                sample_stream(&spec, m, trial, 1).unwrap(),
            )
        };
        ks_ok &= (exact_ks_distance(&x, &y).unwrap() - brute_force_ks(&x, &y)).abs() <= 1e-12;
    }
    r.check(
        ks_ok,
        "exact KS equals brute-force pooled-point oracle for N, M <= 200",
    );

    // Below 0.2 the true value is within 1e-12 of one, finer than the series
    // truncation resolves.
    let grid = |lo: u32, hi: u32| -> Vec<f64> {
        (lo..=hi).map(|k| qks(k as f64 * 1e-4).unwrap()).collect()
    };
    r.check(
        grid(2000, 40_000).windows(2).all(|w| w[1] <= w[0]),
        "qks non-increasing on [0.2, 4] (step 1e-4)",
    );
    r.check(
        grid(0, 2000).windows(2).all(|w| w[1] <= w[0] + 1e-12),
        "qks non-increasing on [0, 0.2] to the 1e-12 series truncation tolerance",
    );
    let q1 = qks(1.0).unwrap();
    r.check(
        (q1 - 0.26999967).abs() <= 1e-6,
        format!("qks(1.0) = {q1:.8} (0.26999967 +/- 1e-6)"),
    );

    let worst = [0.01, 0.05, 0.1, 0.2, 0.5]
        .iter()
        .map(|&alpha| {
            let d = d_crit(alpha, 10_000, 10_000).unwrap();
            (p_value(d, 10_000, 10_000).unwrap() - alpha).abs()
        })
        .fold(0.0, f64::max);
    r.check(
        worst <= 1e-8,
        format!("d_crit round trip, worst |p - alpha| {worst:.1e} <= 1e-8"),
    );
    r.finish();
}

#[test]
fn criterion_6_reference_precision() {
    let mut r = Report::new(6);
    let phi = phi_for_test(0.05, 0.025, 10_000, 10_000).unwrap();
    r.check(
        (phi - 0.000399).abs() <= 5e-6,
        format!("phi(0.05, 0.025, 1e4, 1e4) = {phi:.7} (0.000399 +/- 5e-6)"),
    );
    r.finish();
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    use clap::Parser;
    let cli = Cli::try_parse_from(std::iter::once("sketchks").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    cli::run(cli, &mut out).unwrap();
    out
}

#[test]
fn criterion_7_determinism() {
    let mut r = Report::new(7);
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    for id in [3u32, 5, 6, 9] {
        let files: Vec<Vec<Vec<u8>>> = ["a", "b"]
            .iter()
            .map(|tag| {
                let out = dir.path().join(format!("e{id}{tag}.csv"));
                let args = ExperimentArgs {
                    id,
                    replications: 4,
                    seed: DEFAULT_SEED,
                    out: out.clone(),
                    n: Some(3000),
                    m: Some(2000),
                };
                let mut log = Vec::new();
                cli::cmd_experiment(&args, id >= 6, &mut log).unwrap();
                let summary = dir.path().join(format!("e{id}{tag}.summary.csv"));
                vec![fs::read(out).unwrap(), fs::read(summary).unwrap(), log]
            })
            .collect();
        r.check(
            files[0] == files[1],
            format!("experiment {id} rerun: byte-identical csv, summary and report"),
        );
    }

    let x = sample_stream(&DistributionSpec::gamma(0.5, 1.0).unwrap(), 5000, 1, 0).unwrap();
    let y = sample_stream(&DistributionSpec::uniform(0.0, 1.0).unwrap(), 3000, 1, 1).unwrap();
    common::write_values(dir.path().join("x.txt").as_path(), &x, Some("value"));
    common::write_values(dir.path().join("y.txt").as_path(), &y, Some("value"));
    let ks2 = [
        "ks2",
        "--file-x",
        &p("x.txt"),
        "--file-y",
        &p("y.txt"),
        "--beta",
        "0.025",
        "--skip-header",
    ];
    let first = run_cli(&ks2);
    r.check(
        first == run_cli(&ks2),
        "ks2 on ingested files: byte-identical JSON",
    );

    let cdf_run = |tag: &str| {
        let out = p(&format!("k{tag}.csv"));
        let args = [
            "cdf",
            "--file-x",
            &p("x.txt"),
            "--delta",
            "0.01",
            "--skip-header",
            "--out",
            &out,
            "--with-exact",
        ];
        run_cli(&args);
        (
            fs::read(&out).unwrap(),
            fs::read(p(&format!("k{tag}_exact.csv"))).unwrap(),
        )
    };
    r.check(
        cdf_run("a") == cdf_run("b"),
        "cdf on ingested file: byte-identical knot and exact files",
    );

    let conv = |tag: &str| {
        let out = p(&format!("c{tag}.csv"));
        run_cli(&[
            "convergence",
            "--out",
            &out,
            "--replications",
            "2",
            "--n",
            "2000",
        ]);
        fs::read(out).unwrap()
    };
    r.check(
        conv("a") == conv("b"),
        "convergence rerun: byte-identical csv",
    );
    r.finish();
}
