//! Seeded Monte Carlo experiments.
//!
//! Trial `i` of an experiment with master seed `s` always draws from
//! `derive_trial_rng(s, i)`. Trials are evaluated in parallel in fixed
//! index chunks and the per-chunk moments are merged in index order, so a
//! summary is a pure function of its configuration: the number of worker
//! threads never changes a single bit of the output.

mod checks;
mod suite;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::bounds::{heuristic_std, thm_kl_bound, BoundInputs};
use crate::dist::{self, Pmf};
use crate::error::{invalid, Error, Result};
use crate::losses::kl_divergence;
use crate::numeric::{nearest_rank_quantile, RunningStats};
use crate::sampling::{derive_trial_rng, multinomial_counts};

pub use checks::{
    coupling_diagnostic, exceedance_threshold, expected_kl_check, marginal_gof, poisson_tail_check,
    verify_thm_bound, verify_variance_lb, CouplingReport, ExpectationReport, MarginalReport,
    TailReport, ThmReport, VarianceReport, BOOTSTRAP_RESAMPLES,
};
pub use suite::{run_suite, CheckLine, Suite, SuiteOptions};

/// Trials per work item. Fixed so that the reduction tree does not depend
/// on the thread count.
pub(crate) const CHUNK: u64 = 1024;

/// Largest `reps` for which per-trial losses are buffered.
pub const MAX_BUFFERED_REPS: u64 = 10_000_000;

/// Which distribution to sample from.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Uniform { k: usize },
    Zipf { k: usize, s: f64 },
    TwoPoint { k: usize, mass: f64 },
    File(PathBuf),
}

impl DistSpec {
    pub fn resolve(&self) -> Result<Pmf> {
        match self {
            DistSpec::Uniform { k } => dist::uniform_pmf(*k),
            DistSpec::Zipf { k, s } => dist::zipf_pmf(*k, *s),
            DistSpec::TwoPoint { k, mass } => dist::two_point_pmf(*k, *mass),
            DistSpec::File(path) => dist::read_pmf_file(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dist: DistSpec,
    pub n: u64,
    pub reps: u64,
    pub master_seed: u64,
    /// Add-constant parameter; 1 is the Laplace estimator.
    pub t: f64,
    /// When set, the summary counts trials above `mean + thm_kl_bound(k, n, delta)`.
    pub delta: Option<f64>,
    /// Buffer per-trial losses to report exact quantiles.
    pub quantiles: bool,
}

impl ExperimentConfig {
    /// Laplace estimator, no exceedance count, quantiles on.
    pub fn new(dist: DistSpec, n: u64, reps: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            dist,
            n,
            reps,
            master_seed,
            t: 1.0,
            delta: None,
            quantiles: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.reps == 0 {
            return Err(invalid("reps", "must be at least 1"));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(invalid(
                "t",
                format!("must be finite and >= 0, got {}", self.t),
            ));
        }
        if let Some(d) = self.delta {
            crate::bounds::check_delta(d)?;
        }
        if self.quantiles && self.reps > MAX_BUFFERED_REPS {
            return Err(invalid(
                "reps",
                format!("quantiles need reps <= {MAX_BUFFERED_REPS}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

/// Aggregated losses `KL(p || add_t_estimate)` over the trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub k: usize,
    pub n: u64,
    pub reps: u64,
    pub t: f64,
    pub mean_kl: f64,
    /// Unbiased, divisor `reps - 1`.
    pub var_kl: f64,
    pub std_kl: f64,
    pub quantiles: Option<Quantiles>,
    pub t_delta: Option<f64>,
    pub exceed_count: Option<u64>,
    pub wall_seconds: f64,
}

impl TrialSummary {
    pub fn exceed_frac(&self) -> Option<f64> {
        self.exceed_count.map(|c| c as f64 / self.reps as f64)
    }
}

/// Loss of a single trial.
pub(crate) fn trial_loss(p: &Pmf, n: u64, t: f64, seed: u64, index: u64) -> f64 {
    let mut rng = derive_trial_rng(seed, index);
    let counts = multinomial_counts(&mut rng, p, n);
    let estimate = dist::add_t_estimate(&counts, t).expect("t and n validated");
    kl_divergence(p, &estimate).expect("lengths agree")
}

fn chunk_bounds(reps: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let chunks = reps.div_ceil(CHUNK) as usize;
    (0..chunks).into_par_iter().map(move |c| {
        let c = c as u64;
        (c * CHUNK, ((c + 1) * CHUNK).min(reps))
    })
}

/// Per-trial losses in trial order.
pub fn trial_losses(p: &Pmf, n: u64, t: f64, reps: u64, seed: u64) -> Vec<f64> {
    chunk_bounds(reps)
        .flat_map_iter(|(lo, hi)| (lo..hi).map(move |i| trial_loss(p, n, t, seed, i)))
        .collect()
}

/// Moments of the losses, reduced in fixed chunks merged in index order.
fn streamed_stats(p: &Pmf, n: u64, t: f64, reps: u64, seed: u64) -> RunningStats {
    let parts: Vec<RunningStats> = chunk_bounds(reps)
        .map(|(lo, hi)| (lo..hi).map(|i| trial_loss(p, n, t, seed, i)).collect())
        .collect();
    merge_in_order(&parts)
}

fn merge_in_order(parts: &[RunningStats]) -> RunningStats {
    let mut total = RunningStats::new();
    for part in parts {
        total.merge(part);
    }
    total
}

/// Same reduction as [`streamed_stats`] applied to stored losses.
pub(crate) fn buffered_stats(losses: &[f64]) -> RunningStats {
    let parts: Vec<RunningStats> = losses
        .chunks(CHUNK as usize)
        .map(|c| c.iter().copied().collect())
        .collect();
    merge_in_order(&parts)
}

/// Runs `cfg.reps` independent trials and summarizes the KL losses.
pub fn run_kl_trials(cfg: &ExperimentConfig) -> Result<TrialSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let p = cfg.dist.resolve()?;
    let k = p.k();
    let (n, t, reps, seed) = (cfg.n, cfg.t, cfg.reps, cfg.master_seed);

    let mut buffer = cfg.quantiles.then(|| trial_losses(&p, n, t, reps, seed));
    let stats = match &buffer {
        Some(losses) => buffered_stats(losses),
        None => streamed_stats(&p, n, t, reps, seed),
    };
    let mean_kl = stats.mean();
    let var_kl = stats.variance();

    let t_delta = cfg
        .delta
        .map(|d| BoundInputs::new(k as u64, n, d).map(|b| thm_kl_bound(&b)))
        .transpose()?;
    let exceed_count = t_delta.map(|td| {
        let cut = mean_kl + td;
        match &buffer {
            Some(losses) => losses.iter().filter(|&&l| l > cut).count() as u64,
            // regenerate: trials are a pure function of (seed, index)
            None => chunk_bounds(reps)
                .map(|(lo, hi)| {
                    (lo..hi)
                        .filter(|&i| trial_loss(&p, n, t, seed, i) > cut)
                        .count() as u64
                })
                .sum(),
        }
    });

    let quantiles = buffer.as_mut().map(|losses| Quantiles {
        q50: nearest_rank_quantile(losses, 0.5).unwrap_or(0.0),
        q90: nearest_rank_quantile(losses, 0.9).unwrap_or(0.0),
        q99: nearest_rank_quantile(losses, 0.99).unwrap_or(0.0),
    });

    Ok(TrialSummary {
        k,
        n,
        reps,
        t,
        mean_kl,
        var_kl,
        std_kl: var_kl.sqrt(),
        quantiles,
        t_delta,
        exceed_count,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One row of the sample-versus-heuristic standard deviation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure1Row {
    pub k: u64,
    pub sample_std: f64,
    pub heuristic_std: f64,
    /// `sample_std / heuristic_std`; `None` when the sample std is zero.
    pub ratio: Option<f64>,
}

/// Default sample size of the standard deviation experiment.
pub const FIGURE1_N: u64 = 10_240;
/// Default repetitions per alphabet size.
pub const FIGURE1_REPS: u64 = 1_000;

/// For each `k`, runs Laplace trials on `uniform(k)` and pairs the sample
/// standard deviation of the KL loss with `sqrt(k/2)/n`.
pub fn figure1_experiment(
    ks: &[u64],
    n: u64,
    reps: u64,
    master_seed: u64,
) -> Result<Vec<Figure1Row>> {
    ks.iter()
        .map(|&k| {
            if k == 0 {
                return Err(Error::ZeroAlphabet);
            }
            let mut cfg = ExperimentConfig::new(
                DistSpec::Uniform { k: k as usize },
                n,
                reps,
                crate::sampling::sub_seed(master_seed, k),
            );
            cfg.quantiles = false;
            let s = run_kl_trials(&cfg)?;
            let h = heuristic_std(k, n);
            Ok(Figure1Row {
                k,
                sample_std: s.std_kl,
                heuristic_std: h,
                ratio: (s.std_kl > 0.0).then(|| s.std_kl / h),
            })
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::uniform_pmf;
    use crate::losses::uniform_laplace_kl;

    fn cfg(k: usize, n: u64, reps: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig::new(DistSpec::Uniform { k }, n, reps, seed)
    }

    #[test]
    fn single_symbol_has_zero_loss() {
        let s = run_kl_trials(&cfg(1, 50, 100, 3)).unwrap();
        assert_eq!(s.mean_kl, 0.0);
        assert_eq!(s.var_kl, 0.0);
        assert_eq!(s.quantiles.unwrap().q99, 0.0);
    }

    #[test]
    fn streamed_and_buffered_agree_bitwise() {
        let mut c = cfg(5, 200, 3000, 9);
        c.delta = Some(0.1);
        let a = run_kl_trials(&c).unwrap();
        c.quantiles = false;
        let b = run_kl_trials(&c).unwrap();
        assert_eq!(a.mean_kl.to_bits(), b.mean_kl.to_bits());
        assert_eq!(a.var_kl.to_bits(), b.var_kl.to_bits());
        assert_eq!(a.exceed_count, b.exceed_count);
        assert!(b.quantiles.is_none());
    }

    #[test]
    fn variance_matches_two_pass_recomputation() {
        let p = uniform_pmf(8).unwrap();
        let losses = trial_losses(&p, 300, 1.0, 5000, 1);
        let mean = losses.iter().sum::<f64>() / losses.len() as f64;
        let var =
            losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (losses.len() - 1) as f64;
        let s = run_kl_trials(&cfg(8, 300, 5000, 1)).unwrap();
        assert!((s.var_kl - var).abs() <= 1e-10 * var);
        assert!((s.mean_kl - mean).abs() <= 1e-12 * mean);
    }

    #[test]
    fn trial_losses_follow_uniform_decomposition() {
        let p = uniform_pmf(6).unwrap();
        for i in 0..200 {
            let mut rng = derive_trial_rng(77, i);
            let c = multinomial_counts(&mut rng, &p, 120);
            let direct = trial_loss(&p, 120, 1.0, 77, i);
            let decomposed = uniform_laplace_kl(&c);
            let scale = crate::losses::uniform_laplace_offset(120, 6);
            assert!((direct - decomposed).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn summary_invariants() {
        let mut c = cfg(4, 100, 2000, 5);
        c.delta = Some(0.2);
        let s = run_kl_trials(&c).unwrap();
        let q = s.quantiles.unwrap();
        assert!(s.var_kl >= 0.0);
        assert!(q.q50 <= q.q90 && q.q90 <= q.q99);
        assert!(s.exceed_count.unwrap() <= s.reps);
        assert!(s.mean_kl.is_finite());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut c = cfg(10, 500, 5000, 42);
        c.delta = Some(0.1);
        let one = with_threads(Some(1), || run_kl_trials(&c))
            .unwrap()
            .unwrap();
        let four = with_threads(Some(4), || run_kl_trials(&c))
            .unwrap()
            .unwrap();
        let mut a = one.clone();
        let mut b = four.clone();
        a.wall_seconds = 0.0;
        b.wall_seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_estimator_may_give_infinite_loss() {
        let mut c = cfg(50, 10, 20, 1);
        c.t = 0.0;
        c.quantiles = false;
        let s = run_kl_trials(&c).unwrap();
        assert_eq!(s.mean_kl, f64::INFINITY);
        assert!(s.var_kl.is_nan());
    }

    #[test]
    fn config_validation() {
        assert!(run_kl_trials(&cfg(2, 0, 10, 1)).is_err());
        assert!(run_kl_trials(&cfg(2, 10, 0, 1)).is_err());
        let mut c = cfg(2, 10, 10, 1);
        c.t = -0.5;
        assert!(run_kl_trials(&c).is_err());
        c.t = 1.0;
        c.delta = Some(1.5);
        assert!(run_kl_trials(&c).is_err());
        let missing = ExperimentConfig::new(DistSpec::File("/nonexistent/p.txt".into()), 10, 10, 1);
        assert!(matches!(run_kl_trials(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn figure1_degenerate_and_monotone() {
        let rows = figure1_experiment(&[1, 2, 4], 200, 50, 3).unwrap();
        assert_eq!(rows[0].sample_std, 0.0);
        assert!(rows[0].ratio.is_none());
        assert!(rows
            .windows(2)
            .all(|w| w[0].heuristic_std < w[1].heuristic_std));
        assert!(figure1_experiment(&[0], 10, 10, 1).is_err());
    }
}
