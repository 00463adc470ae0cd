#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rank interval `[count(< v) + 1, count(<= v)]` of `v` in sorted data.
pub fn rank_interval(sorted: &[f64], v: f64) -> (usize, usize) {
    let below = sorted.partition_point(|&x| x < v);
    let upto = sorted.partition_point(|&x| x <= v);
    (below + 1, upto)
}

/// True when some occurrence of `v` has a rank in
/// `[floor((p - ε)N), ceil((p + ε)N)]`.
pub fn satisfies_rank_guarantee(sorted: &[f64], v: f64, p: f64, epsilon: f64) -> bool {
    let n = sorted.len() as f64;
    let (lo, hi) = rank_interval(sorted, v);
    if hi < lo {
        return false;
    }
    let floor = ((p - epsilon) * n - 1e-9).floor();
    let ceil = ((p + epsilon) * n + 1e-9).ceil();
    lo as f64 <= ceil && hi as f64 >= floor
}

/// KS distance evaluated at every pooled point with counting CDFs.
pub fn brute_force_ks(x: &[f64], y: &[f64]) -> f64 {
    let cdf = |s: &[f64], z: f64| s.iter().filter(|&&v| v <= z).count() as f64 / s.len() as f64;
    x.iter()
        .chain(y)
        .map(|&z| (cdf(x, z) - cdf(y, z)).abs())
        .fold(0.0, f64::max)
}

/// Values drawn from a small lattice so ties are common.
pub fn tied_values(rng: &mut ChaCha8Rng, n: usize, levels: u32) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(0..levels) as f64 * 0.5)
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn write_values(path: &Path, values: &[f64], header: Option<&str>) {
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(h);
        text.push('\n');
    }
    for v in values {
        text.push_str(&format!("{v:?}\n"));
    }
    std::fs::write(path, text).unwrap();
}

pub fn sketchks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchks"))
        .args(args)
        .env_remove("SKETCHKS_SEED")
        .output()
        .expect("failed to launch sketchks")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}
