//! Monte Carlo checks of the individual bounds. Each report carries the
//! measured quantity, the bound it is compared against and a verdict.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{Discrete, Poisson as PoissonDist};

use super::{buffered_stats, run_kl_trials, trial_losses, DistSpec, ExperimentConfig, CHUNK};
use crate::bounds::{
    self, coupling_gap_bound, poisson_tail_radius, thm_kl_bound, variance_lower_bound, BoundInputs,
};
use crate::dist::uniform_pmf;
use crate::error::{invalid, Result};
use crate::numeric::{chi_square_gof, histogram, nearest_rank_quantile, GofResult, RunningStats};
use crate::sampling::{coupled_pair, derive_aux_rng, derive_trial_rng, poisson, CoupledPair};

/// Bootstrap resamples used for the variance interval.
pub const BOOTSTRAP_RESAMPLES: u64 = 2000;
const BOOTSTRAP_PURPOSE: u64 = 0xB007;

/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575_829_303_548_900_4;

/// Largest exceedance frequency accepted for a claimed failure probability
/// `delta`: `delta + 3 sqrt(delta (1 - delta) / reps)`.
pub fn exceedance_threshold(delta: f64, reps: u64) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / reps as f64).sqrt()
}

fn chunked<T: Send>(reps: u64, f: impl Fn(u64, u64, u64) -> T + Sync) -> Vec<T> {
    (0..reps.div_ceil(CHUNK) as usize)
        .into_par_iter()
        .map(|c| {
            let c = c as u64;
            f(c, c * CHUNK, ((c + 1) * CHUNK).min(reps))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub k: u64,
    pub n: u64,
    pub reps: u64,
    pub empirical_var: f64,
    pub lower_bound: f64,
    pub ratio: f64,
    /// Percentile bootstrap 95% interval on `empirical_var`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub pass: bool,
}

/// Compares the sample variance of `KL(uniform(k) || laplace)` with `k/(32 n^2)`.
pub fn verify_variance_lb(k: u64, n: u64, reps: u64, seed: u64) -> Result<VarianceReport> {
    let lower_bound = variance_lower_bound(k, n)?;
    if reps < 2 {
        return Err(invalid("reps", "need at least 2 trials for a variance"));
    }
    let p = uniform_pmf(k as usize)?;
    let losses = trial_losses(&p, n, 1.0, reps, seed);
    let empirical_var = buffered_stats(&losses).variance();

    let len = losses.len();
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = derive_aux_rng(seed, BOOTSTRAP_PURPOSE, b);
            let mut s = RunningStats::new();
            for _ in 0..len {
                s.push(losses[rng.random_range(0..len)]);
            }
            s.variance()
        })
        .collect();
    let ci_low = nearest_rank_quantile(&mut boot, 0.025).unwrap_or(f64::NAN);
    let ci_high = nearest_rank_quantile(&mut boot, 0.975).unwrap_or(f64::NAN);

    Ok(VarianceReport {
        k,
        n,
        reps,
        empirical_var,
        lower_bound,
        ratio: empirical_var / lower_bound,
        ci_low,
        ci_high,
        pass: empirical_var >= lower_bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThmReport {
    pub k: u64,
    pub n: u64,
    pub reps: u64,
    pub delta: f64,
    pub t_delta: f64,
    pub mean_kl: f64,
    pub median_kl: f64,
    /// Fraction of trials with loss above `mean_kl + t_delta`.
    pub exceed_frac: f64,
    /// Same with the sample median as the center.
    pub exceed_frac_median: f64,
    pub allowed: f64,
    pub threshold: f64,
    pub pass: bool,
    pub pass_median: bool,
}

/// Exceedance frequency of the high-probability KL bound under uniform `p`.
pub fn verify_thm_bound(k: u64, n: u64, reps: u64, delta: f64, seed: u64) -> Result<ThmReport> {
    let b = BoundInputs::new(k, n, delta)?;
    if reps == 0 {
        return Err(invalid("reps", "must be at least 1"));
    }
    let t_delta = thm_kl_bound(&b);
    let p = uniform_pmf(k as usize)?;
    let mut losses = trial_losses(&p, n, 1.0, reps, seed);
    let mean_kl = buffered_stats(&losses).mean();
    let frac_above =
        |cut: f64, ls: &[f64]| ls.iter().filter(|&&l| l > cut).count() as f64 / reps as f64;
    let exceed_frac = frac_above(mean_kl + t_delta, &losses);
    let median_kl = nearest_rank_quantile(&mut losses, 0.5).unwrap_or(f64::NAN);
    let exceed_frac_median = frac_above(median_kl + t_delta, &losses);
    let threshold = exceedance_threshold(delta, reps);
    Ok(ThmReport {
        k,
        n,
        reps,
        delta,
        t_delta,
        mean_kl,
        median_kl,
        exceed_frac,
        exceed_frac_median,
        allowed: delta,
        threshold,
        pass: exceed_frac <= threshold,
        pass_median: exceed_frac_median <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub lambda: f64,
    pub delta: f64,
    pub reps: u64,
    pub fail_frac: f64,
    pub allowed: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Frequency of `|N + 1 - lambda| > 6 sqrt(N + 1) log(2/delta)` for `N ~ Poi(lambda)`.
pub fn poisson_tail_check(lambda: f64, delta: f64, reps: u64, seed: u64) -> Result<TailReport> {
    bounds::check_delta(delta)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if reps == 0 {
        return Err(invalid("reps", "must be at least 1"));
    }
    let fails: u64 = chunked(reps, |c, lo, hi| {
        let mut rng = derive_trial_rng(seed, c);
        let mut f = 0u64;
        for _ in lo..hi {
            let draw = poisson(&mut rng, lambda).expect("lambda validated");
            if (draw as f64 + 1.0 - lambda).abs() > poisson_tail_radius(draw, delta) {
                f += 1;
            }
        }
        f
    })
    .into_iter()
    .sum();
    let fail_frac = fails as f64 / reps as f64;
    let threshold = exceedance_threshold(delta, reps);
    Ok(TailReport {
        lambda,
        delta,
        reps,
        fail_frac,
        allowed: delta,
        threshold,
        pass: fail_frac <= threshold,
    })
}

fn coupled_draws(n: u64, prob: f64, reps: u64, seed: u64) -> Result<Vec<Vec<CoupledPair>>> {
    if reps == 0 {
        return Err(invalid("reps", "must be at least 1"));
    }
    // validate once so the workers can unwrap
    coupled_pair(&mut derive_trial_rng(seed, 0), n, prob)?;
    Ok(chunked(reps, |c, lo, hi| {
        let mut rng = derive_trial_rng(seed, c);
        (lo..hi)
            .map(|_| coupled_pair(&mut rng, n, prob).expect("validated"))
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub n: u64,
    pub prob: f64,
    pub reps: u64,
    /// Sample mean of `(m - m_prime)/(m_prime + 1)`.
    pub est_gap: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Estimates `E[(M - M')/(M' + 1)]` under the coupling and compares the
/// lower edge of its 99% normal interval with `311/n + 160/(n^{3/2} prob)`.
pub fn coupling_diagnostic(n: u64, prob: f64, reps: u64, seed: u64) -> Result<CouplingReport> {
    let parts: Vec<RunningStats> = coupled_draws(n, prob, reps, seed)?
        .iter()
        .map(|chunk| chunk.iter().map(CoupledPair::gap_ratio).collect())
        .collect();
    let mut stats = RunningStats::new();
    for p in &parts {
        stats.merge(p);
    }
    let est_gap = stats.mean();
    let std_err = stats.std_dev() / (reps as f64).sqrt();
    let bound = coupling_gap_bound(n, prob);
    let ci_low = est_gap - Z_99 * std_err;
    Ok(CouplingReport {
        n,
        prob,
        reps,
        est_gap,
        std_err,
        ci_low,
        ci_high: est_gap + Z_99 * std_err,
        bound,
        pass: ci_low <= bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub n: u64,
    pub prob: f64,
    pub reps: u64,
    pub chi2_m: GofResult,
    pub chi2_mprime: GofResult,
    pub pass: bool,
}

/// Smallest p-value accepted by [`marginal_gof`].
pub const GOF_SIGNIFICANCE: f64 = 1e-3;

/// Chi-square tests of the coupling marginals against `Bin(n, prob)` and `Poi(n prob)`.
pub fn marginal_gof(n: u64, prob: f64, reps: u64, seed: u64) -> Result<MarginalReport> {
    if reps < 100_000 {
        return Err(invalid("reps", "goodness-of-fit needs at least 1e5 draws"));
    }
    let draws = coupled_draws(n, prob, reps, seed)?;
    let ms = histogram(draws.iter().flatten().map(|c| c.m));
    let mps = histogram(draws.iter().flatten().map(|c| c.m_prime));
    let bin_pmf = bounds::exact::binomial_pmf_table(n, prob);
    let chi2_m = chi_square_gof(&ms, |x| bin_pmf.get(x as usize).copied().unwrap_or(0.0));
    let poi = PoissonDist::new(n as f64 * prob).map_err(|e| invalid("prob", e.to_string()))?;
    let chi2_mprime = chi_square_gof(&mps, |x| poi.pmf(x));
    Ok(MarginalReport {
        n,
        prob,
        reps,
        pass: chi2_m.p_value >= GOF_SIGNIFICANCE && chi2_mprime.p_value >= GOF_SIGNIFICANCE,
        chi2_m,
        chi2_mprime,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationReport {
    pub k: usize,
    pub n: u64,
    pub reps: u64,
    pub mean_kl: f64,
    pub std_kl: f64,
    /// `(k - 1)/n`.
    pub ceiling: f64,
    /// `3 std_kl / sqrt(reps)`.
    pub slack: f64,
    pub pass: bool,
}

/// Checks the mean Laplace loss against the worst-case expectation `(k - 1)/n`.
pub fn expected_kl_check(
    dist: &DistSpec,
    n: u64,
    reps: u64,
    seed: u64,
) -> Result<ExpectationReport> {
    let mut cfg = ExperimentConfig::new(dist.clone(), n, reps, seed);
    cfg.quantiles = false;
    let s = run_kl_trials(&cfg)?;
    let ceiling = (s.k as f64 - 1.0) / n as f64;
    let slack = 3.0 * s.std_kl / (reps as f64).sqrt();
    Ok(ExpectationReport {
        k: s.k,
        n,
        reps,
        mean_kl: s.mean_kl,
        std_kl: s.std_kl,
        ceiling,
        slack,
        pass: s.mean_kl <= ceiling + slack,
    })
}
