//! Greenwald-Khanna ε-approximate quantile summary.
//!
//! The summary keeps an ordered list of tuples `(v, g, Δ)` where
//!
//! * `g[i] = r_min(v[i]) - r_min(v[i-1])`
//! * `Δ[i] = r_max(v[i]) - r_min(v[i])`
//!
//! so that `r_min(v[i])` is the prefix sum of `g` and the sum of all `g` is the
//! number of observations. New tuples enter with `g = 1` and
//! `Δ = floor(2εn)` (or `Δ = 0` at either extreme), and every `floor(1/(2ε))`
//! insertions adjacent tuples are merged while `g[i] + g[i+1] + Δ[i+1]` stays
//! within `floor(2εn)`.
//!
//! Ranks are 1-based; equal values receive consecutive ranks in insertion
//! order. A quantile query for probability `p` over `N` observations returns a
//! stored observation whose exact rank `r` satisfies
//! `floor((p - ε)N) <= r <= ceil((p + ε)N)`.

use crate::error::{domain, state, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchTuple {
    pub value: f64,
    /// Gap between this tuple's minimum rank and the previous tuple's.
    pub g: u64,
    /// Rank uncertainty of this tuple.
    pub delta: u64,
}

#[derive(Debug, Clone)]
pub struct QuantileSketch {
    epsilon: f64,
    count: u64,
    tuples: Vec<SketchTuple>,
    sealed: bool,
    /// Compress every this many insertions; 0 disables automatic compression.
    compress_period: u64,
    /// Prefix sums of `g`, filled in by [`QuantileSketch::seal`].
    rmin: Vec<u64>,
}

impl QuantileSketch {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain(format!(
                "sketch epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let compress_period = ((1.0 / (2.0 * epsilon)).floor() as u64).max(1);
        Ok(QuantileSketch {
            epsilon,
            count: 0,
            tuples: Vec::new(),
            sealed: false,
            compress_period,
            rmin: Vec::new(),
        })
    }

    /// Builds and seals a sketch over `values`, inserted in iteration order.
    pub fn from_values<I>(epsilon: f64, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut sketch = Self::new(epsilon)?;
        for v in values {
            sketch.insert(v)?;
        }
        sketch.seal();
        Ok(sketch)
    }

    /// Disables the periodic compression so the raw insertion trace can be
    /// inspected; [`QuantileSketch::compress`] can still be called by hand.
    pub fn without_auto_compress(mut self) -> Self {
        self.compress_period = 0;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn tuples(&self) -> &[SketchTuple] {
        &self.tuples
    }

    /// Number of stored tuples.
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn min(&self) -> Option<f64> {
        self.tuples.first().map(|t| t.value)
    }

    pub fn max(&self) -> Option<f64> {
        self.tuples.last().map(|t| t.value)
    }

    /// Soft space bound `(11 / 2ε) log2(2εn) + 4`, or `None` while `2εn <= 1`.
    pub fn space_bound(&self) -> Option<f64> {
        let two_eps_n = 2.0 * self.epsilon * self.count as f64;
        (two_eps_n > 1.0).then(|| 11.0 / (2.0 * self.epsilon) * two_eps_n.log2() + 4.0)
    }

    fn threshold(&self) -> u64 {
        (2.0 * self.epsilon * self.count as f64).floor() as u64
    }

    pub fn insert(&mut self, value: f64) -> Result<()> {
        if self.sealed {
            return Err(state("cannot insert into a sealed sketch"));
        }
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sketch values must be finite, got {value}"
            )));
        }
        // After any equal values so ties keep insertion order.
        let pos = self.tuples.partition_point(|t| t.value <= value);
        let delta = if pos == 0 || pos == self.tuples.len() {
            0
        } else {
            self.threshold()
        };
        self.tuples.insert(pos, SketchTuple { value, g: 1, delta });
        self.count += 1;
        if self.compress_period > 0 && self.count.is_multiple_of(self.compress_period) {
            self.compress();
        }
        Ok(())
    }

    /// Merges adjacent tuples from right to left. The first and last tuples
    /// always survive so the extremes stay exact.
    pub fn compress(&mut self) {
        let len = self.tuples.len();
        if len < 3 {
            return;
        }
        let threshold = self.threshold();
        let mut kept = Vec::with_capacity(len);
        let mut current = self.tuples[len - 1];
        for i in (1..len - 1).rev() {
            let t = self.tuples[i];
            if t.g + current.g + current.delta <= threshold {
                current.g += t.g;
            } else {
                kept.push(current);
                current = t;
            }
        }
        kept.push(current);
        kept.push(self.tuples[0]);
        kept.reverse();
        self.tuples = kept;
        if self.sealed {
            self.refresh_ranks();
        }
    }

    /// Final compression; afterwards the sketch is read-only and answers
    /// rank-bound queries.
    pub fn seal(&mut self) {
        if self.sealed {
            return;
        }
        self.compress();
        self.sealed = true;
        self.refresh_ranks();
    }

    fn refresh_ranks(&mut self) {
        self.rmin = self
            .tuples
            .iter()
            .scan(0u64, |acc, t| {
                *acc += t.g;
                Some(*acc)
            })
            .collect();
    }

    /// ε-approximate quantile at probability `p`.
    ///
    /// Requests below `1/N` are answered as `1/N`; `p = 1` returns the maximum.
    pub fn query_quantile(&self, p: f64) -> Result<f64> {
        if self.count == 0 {
            return Err(state("quantile query on an empty sketch"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(domain(format!("probability must lie in (0, 1], got {p}")));
        }
        let last = self.tuples[self.tuples.len() - 1].value;
        if p >= 1.0 {
            return Ok(last);
        }
        let n = self.count as f64;
        let target = p.max(1.0 / n) * n;
        let tol = self.epsilon * n;
        let lo = target - tol - 1e-9;
        let hi = target + tol + 1e-9;

        // First tuple whose rank interval lies inside [target - εN, target + εN].
        // If the +1 slack on a fresh tuple leaves no such tuple, fall back to
        // the tuple just before the first one whose r_max overshoots.
        let mut rmin = 0u64;
        let mut fallback = None;
        for (i, t) in self.tuples.iter().enumerate() {
            rmin += t.g;
            let rmax = rmin + t.delta;
            if rmin as f64 >= lo && rmax as f64 <= hi {
                return Ok(t.value);
            }
            if fallback.is_none() && rmax as f64 > hi {
                fallback = Some(i.saturating_sub(1));
            }
        }
        Ok(fallback.map_or(last, |i| self.tuples[i].value))
    }

    /// Element-wise [`QuantileSketch::query_quantile`] over non-decreasing
    /// probabilities; the answers are clamped to be non-decreasing.
    pub fn query_quantiles(&self, probs: &[f64]) -> Result<Vec<f64>> {
        if probs.is_empty() {
            return Err(domain("probability list is empty"));
        }
        if probs.windows(2).any(|w| w[1] < w[0]) {
            return Err(domain("probabilities must be non-decreasing"));
        }
        let mut out = Vec::with_capacity(probs.len());
        let mut prev = f64::NEG_INFINITY;
        for &p in probs {
            let q = self.query_quantile(p)?.max(prev);
            out.push(q);
            prev = q;
        }
        Ok(out)
    }

    /// Bounds `(r_min, r_max)` on the number of observations `<= value`.
    pub fn rank_bounds(&self, value: f64) -> Result<(u64, u64)> {
        if !self.sealed {
            return Err(state("rank bounds require a sealed sketch"));
        }
        if self.count == 0 {
            return Err(state("rank bounds on an empty sketch"));
        }
        let n = self.count;
        let len = self.tuples.len();
        if value < self.tuples[0].value {
            return Ok((0, 0));
        }
        if value >= self.tuples[len - 1].value {
            return Ok((n, n));
        }
        let i = self.tuples.partition_point(|t| t.value <= value) - 1;
        let next = &self.tuples[i + 1];
        let upper = self.rmin[i + 1] + next.delta - 1;
        Ok((self.rmin[i], upper.min(n)))
    }
}
