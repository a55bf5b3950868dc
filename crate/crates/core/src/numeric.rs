//! Numerical helpers shared by the loss functions and the Monte Carlo harness:
//! compensated summation, mergeable running moments, order statistics and a
//! chi-square goodness-of-fit test against an exact discrete pmf.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier (improved Kahan–Babuška) compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of `f64`.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Welford running mean/variance with Chan et al. pairwise merging.
///
/// Merging is deterministic for a fixed merge order, which is what the
/// harness relies on: trials are reduced in fixed-size index chunks and the
/// chunk states are merged left to right.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
    // +inf samples are counted here and excluded from the moments
    infinite: u64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        if x == f64::INFINITY {
            self.infinite += 1;
            return;
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        self.infinite += other.infinite;
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            let infinite = self.infinite;
            *self = *other;
            self.infinite = infinite;
            return;
        }
        let n_a = self.count as f64;
        let n_b = other.count as f64;
        let total = n_a + n_b;
        let delta = other.mean - self.mean;
        self.mean += delta * n_b / total;
        self.m2 += other.m2 + delta * delta * n_a * n_b / total;
        self.count += other.count;
    }

    /// Number of samples, including infinite ones.
    pub fn count(&self) -> u64 {
        self.count + self.infinite
    }

    /// `+inf` once any infinite sample was pushed.
    pub fn mean(&self) -> f64 {
        if self.infinite > 0 {
            f64::INFINITY
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance (divisor `count - 1`); zero for fewer than
    /// two samples, NaN once any infinite sample was pushed.
    pub fn variance(&self) -> f64 {
        if self.infinite > 0 {
            f64::NAN
        } else if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Nearest-rank quantile: the `ceil(level * len)`-th smallest value.
///
/// Reorders `values` in place. Returns `None` for an empty slice.
pub fn nearest_rank_quantile(values: &mut [f64], level: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let rank = ((level * values.len() as f64).ceil() as usize).clamp(1, values.len());
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Some(*v)
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Minimum expected count per bin; sparser tail bins are merged.
pub const MIN_EXPECTED: f64 = 5.0;

/// Chi-square goodness-of-fit of a histogram of nonnegative integer draws
/// against an exact pmf.
///
/// `observed[x]` is the number of draws equal to `x`. `pmf` is evaluated on
/// `0..=x_max` where `x_max` covers both the observed range and all but
/// `1e-13` of the target mass; the last cell absorbs the upper tail. Cells
/// are merged left to right until each has expected count at least
/// [`MIN_EXPECTED`], with any short remainder folded into the final cell.
pub fn chi_square_gof(observed: &[u64], pmf: impl Fn(u64) -> f64) -> GofResult {
    let draws: u64 = observed.iter().sum();
    let n = draws as f64;
    let mut probs = Vec::new();
    let mut cumulative = 0.0;
    let mut x = 0u64;
    loop {
        let p = pmf(x);
        probs.push(p);
        cumulative += p;
        x += 1;
        if (x as usize) >= observed.len()
            && (1.0 - cumulative < 1e-13 || (p == 0.0 && cumulative > 0.5))
        {
            break;
        }
    }
    // upper-tail cell: P[X >= last]
    let last = probs.len() - 1;
    let head: f64 = compensated_sum(probs[..last].iter().copied());
    probs[last] = (1.0 - head).max(0.0);
    let mut obs_cells = vec![0u64; probs.len()];
    for (v, &c) in observed.iter().enumerate() {
        obs_cells[v.min(last)] += c;
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc_e = 0.0;
    let mut acc_o = 0.0;
    for (p, o) in probs.iter().zip(&obs_cells) {
        acc_e += p * n;
        acc_o += *o as f64;
        if acc_e >= MIN_EXPECTED {
            cells.push((acc_o, acc_e));
            acc_e = 0.0;
            acc_o = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match cells.last_mut() {
            Some(cell) => {
                cell.0 += acc_o;
                cell.1 += acc_e;
            }
            None => cells.push((acc_o, acc_e)),
        }
    }
    if cells.len() < 2 {
        return GofResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        };
    }
    let statistic = compensated_sum(cells.iter().map(|&(o, e)| (o - e) * (o - e) / e));
    let dof = cells.len() - 1;
    let p_value = match ChiSquared::new(dof as f64) {
        Ok(dist) => dist.sf(statistic),
        Err(_) => f64::NAN,
    };
    GofResult {
        statistic,
        dof,
        p_value,
    }
}

/// Kolmogorov distance `sup_x |F_emp(x) - F(x)|` between a histogram of
/// integer draws and an exact cdf.
pub fn kolmogorov_distance(observed: &[u64], cdf: impl Fn(u64) -> f64) -> f64 {
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let mut running = 0u64;
    let mut worst: f64 = 0.0;
    for (x, &c) in observed.iter().enumerate() {
        running += c;
        let emp = running as f64 / n as f64;
        worst = worst.max((emp - cdf(x as u64)).abs());
    }
    worst
}

/// Builds a histogram from integer draws.
pub fn histogram<I: IntoIterator<Item = u64>>(draws: I) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::new();
    for d in draws {
        let idx = d as usize;
        if idx >= h.len() {
            h.resize(idx + 1, 0);
        }
        h[idx] += 1;
    }
    h
}
