//! Probability vectors, count vectors and the add-constant estimator family.
//!
//! A [`Pmf`] is a validated point of the simplex over `k` symbols. A
//! [`Measure`] is any nonnegative vector of the same shape; it carries the
//! Poissonized pseudo-estimate `(N_i + 1)/(n + k)`, whose mass equals one
//! only when the Poisson total happens to equal `n`.

use std::ops::Deref;
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on `|sum - 1|` accepted by [`make_pmf`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability mass function over `[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl Deref for Pmf {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.probs
    }
}

impl AsRef<[f64]> for Pmf {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// A nonnegative vector over `[k]` with unconstrained total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::InvalidWeight { index, value });
        }
        Ok(Measure { weights })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::compensated_sum(self.weights.iter().copied())
    }
}

impl Deref for Measure {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.weights
    }
}

impl AsRef<[f64]> for Measure {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}

impl From<Pmf> for Measure {
    fn from(p: Pmf) -> Self {
        Measure { weights: p.probs }
    }
}

/// Symbol counts `N_1, ..., N_k` together with the number of draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    counts: Vec<u64>,
    total: u64,
}

impl Counts {
    /// Builds counts and derives the total. Fails on an empty vector or overflow.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::ZeroAlphabet);
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| invalid("counts", "total overflows u64"))?;
        Ok(Counts { counts, total })
    }

    /// Builds counts with an explicit total, which must equal their sum.
    pub fn with_total(counts: Vec<u64>, total: u64) -> Result<Self> {
        let c = Counts::new(counts)?;
        if c.total != total {
            return Err(Error::CountMismatch {
                actual: c.total,
                total,
            });
        }
        Ok(c)
    }

    pub(crate) fn from_parts_unchecked(counts: Vec<u64>, total: u64) -> Self {
        debug_assert_eq!(counts.iter().sum::<u64>(), total);
        Counts { counts, total }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Validates a weight vector as a pmf.
///
/// Weights within [`SUM_TOLERANCE`] of unit mass are divided by their sum once.
pub fn make_pmf(weights: &[f64]) -> Result<Pmf> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::InvalidWeight { index, value });
    }
    let sum = crate::numeric::compensated_sum(weights.iter().copied());
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotNormalized { sum });
    }
    let probs = if sum == 1.0 {
        weights.to_vec()
    } else {
        weights.iter().map(|w| w / sum).collect()
    };
    Ok(Pmf { probs })
}

pub fn uniform_pmf(k: usize) -> Result<Pmf> {
    if k == 0 {
        return Err(Error::ZeroAlphabet);
    }
    Ok(Pmf {
        probs: vec![1.0 / k as f64; k],
    })
}

/// Zipf weights `i^{-s} / sum_j j^{-s}` over `[k]`.
pub fn zipf_pmf(k: usize, s: f64) -> Result<Pmf> {
    if k == 0 {
        return Err(Error::ZeroAlphabet);
    }
    if !s.is_finite() {
        return Err(invalid("s", format!("exponent must be finite, got {s}")));
    }
    let raw: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
    let z = crate::numeric::compensated_sum(raw.iter().copied());
    Ok(Pmf {
        probs: raw.into_iter().map(|w| w / z).collect(),
    })
}

/// Puts `mass` on the first symbol and spreads `1 - mass` evenly over the rest.
pub fn two_point_pmf(k: usize, mass: f64) -> Result<Pmf> {
    if k == 0 {
        return Err(Error::ZeroAlphabet);
    }
    if !(0.0..=1.0).contains(&mass) {
        return Err(invalid("mass", format!("must lie in [0, 1], got {mass}")));
    }
    if k == 1 {
        if mass != 1.0 {
            return Err(invalid("mass", "a one-symbol alphabet needs mass 1"));
        }
        return Ok(Pmf { probs: vec![1.0] });
    }
    let rest = (1.0 - mass) / (k - 1) as f64;
    let mut probs = vec![rest; k];
    probs[0] = mass;
    Ok(Pmf { probs })
}

/// Reads one nonnegative decimal weight per line; blank lines are skipped.
pub fn read_pmf_file(path: &Path) -> Result<Pmf> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut weights = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let w: f64 = trimmed.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            text: trimmed.to_string(),
        })?;
        weights.push(w);
    }
    make_pmf(&weights)
}

/// Maximum-likelihood estimate `N_i / n`.
pub fn empirical_estimate(c: &Counts) -> Result<Pmf> {
    if c.total == 0 {
        return Err(Error::NoObservations);
    }
    let n = c.total as f64;
    Ok(Pmf {
        probs: c.counts.iter().map(|&x| x as f64 / n).collect(),
    })
}

/// Add-`t` estimate `(N_i + t) / (n + k t)`. `t = 1` is Laplace, `t = 1/2` is KT.
pub fn add_t_estimate(c: &Counts, t: f64) -> Result<Pmf> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(
            "t",
            format!("must be finite and nonnegative, got {t}"),
        ));
    }
    if t == 0.0 && c.total == 0 {
        return Err(Error::NoObservations);
    }
    let denom = c.total as f64 + c.k() as f64 * t;
    Ok(Pmf {
        probs: c.counts.iter().map(|&x| (x as f64 + t) / denom).collect(),
    })
}

/// Laplace (add-one) estimate.
pub fn laplace_estimate(c: &Counts) -> Pmf {
    let denom = c.total as f64 + c.k() as f64;
    Pmf {
        probs: c.counts.iter().map(|&x| (x as f64 + 1.0) / denom).collect(),
    }
}

/// Pseudo-estimate `(N'_i + 1) / (n + k)` for counts drawn with any total.
///
/// Its mass is `(N + k)/(n + k)` where `N = c.total()`.
pub fn pseudo_estimate(c: &Counts, n: u64) -> Result<Measure> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let denom = n as f64 + c.k() as f64;
    Ok(Measure {
        weights: c.counts.iter().map(|&x| (x as f64 + 1.0) / denom).collect(),
    })
}
