//! Closed-form bounds, constants and auxiliary identities for the Laplace
//! estimator under KL loss.
//!
//! Constants enter exactly as published (6, 311, 160,
//! 36, 32). [`bgpv_deviation`] is only known up to a multiplicative
//! constant and is evaluated with constant one; treat it as an order of
//! magnitude.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Alphabet size, sample size and failure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    k: u64,
    n: u64,
    delta: f64,
}

impl BoundInputs {
    pub fn new(k: u64, n: u64, delta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroAlphabet);
        }
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        check_delta(delta)?;
        Ok(BoundInputs { k, n, delta })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Bounded-differences deviation `sqrt(n c^2 / 2 * log(1/delta))` for a
/// function of `n` independent inputs whose per-coordinate influence is at
/// most `c_inf`.
pub fn mcdiarmid_deviation(c_inf: f64, n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(c_inf.is_finite() && c_inf > 0.0) {
        return Err(invalid("c_inf", format!("must be positive, got {c_inf}")));
    }
    Ok((n as f64 * c_inf * c_inf / 2.0 * (1.0 / delta).ln()).sqrt())
}

/// Additive deviation term of the high-probability KL bound for the
/// Laplace estimator:
///
/// `6 sqrt(k log^5(4k/delta)) / n + 311/n + 160 k / n^{3/2}`.
pub fn thm_kl_bound(b: &BoundInputs) -> f64 {
    let k = b.k as f64;
    let n = b.n as f64;
    let l = (4.0 * k / b.delta).ln();
    6.0 * (k * l.powi(5)).sqrt() / n + gamma_term(b.k, b.n)
}

/// Previous deviation rate `(k/n) log n log(k/delta)`, constant one.
pub fn bgpv_deviation(b: &BoundInputs) -> Result<f64> {
    if b.n < 2 {
        return Err(invalid("n", "needs n >= 2 so that log n > 0"));
    }
    let k = b.k as f64;
    let n = b.n as f64;
    Ok(k / n * n.ln() * (k / b.delta).ln())
}

/// Smallest `k0 <= k_max` such that [`thm_kl_bound`] is strictly below
/// [`bgpv_deviation`] for every `k` in `k0..=k_max`.
pub fn bound_crossover(n: u64, delta: f64, k_max: u64) -> Result<Option<u64>> {
    let mut k0 = None;
    for k in (1..=k_max).rev() {
        let b = BoundInputs::new(k, n, delta)?;
        if thm_kl_bound(&b) < bgpv_deviation(&b)? {
            k0 = Some(k);
        } else {
            break;
        }
    }
    Ok(k0)
}

/// `k / (32 n^2)`, a lower bound on `Var KL(p || laplace)` for uniform `p`
/// over `[k]` once `n >= 10 k`.
pub fn variance_lower_bound(k: u64, n: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroAlphabet);
    }
    if n < k.saturating_mul(10) {
        return Err(Error::HypothesisViolated { k, n });
    }
    let n = n as f64;
    Ok(k as f64 / (32.0 * n * n))
}

/// Heuristic standard deviation `sqrt(k/2) / n` of the Laplace KL loss
/// under the uniform distribution (chi-square approximation with `k`
/// degrees of freedom).
pub fn heuristic_std(k: u64, n: u64) -> f64 {
    (k as f64 / 2.0).sqrt() / n as f64
}

/// Radius `6 sqrt(N + 1) log(2/delta)` such that `|N + 1 - lambda|` is within
/// it with probability at least `1 - delta` when `N ~ Poi(lambda)`.
///
/// `delta` must lie in `(0, 1)`.
pub fn poisson_tail_radius(n_obs: u64, delta: f64) -> f64 {
    6.0 * (n_obs as f64 + 1.0).sqrt() * (2.0 / delta).ln()
}

/// Expectation gap `311/n + 160 k / n^{3/2}` between multinomial and
/// Poissonized sampling.
pub fn gamma_term(k: u64, n: u64) -> f64 {
    let n = n as f64;
    311.0 / n + 160.0 * k as f64 / (n * n.sqrt())
}

/// Per-symbol version of [`gamma_term`]: `311/n + 160/(n^{3/2} prob)`.
pub fn coupling_gap_bound(n: u64, prob: f64) -> f64 {
    let n = n as f64;
    311.0 / n + 160.0 / (n * n.sqrt() * prob)
}

/// Clipping level `36 log^2(4k/delta) / n` for the per-symbol terms.
pub fn clip_threshold_alpha(b: &BoundInputs) -> f64 {
    let l = (4.0 * b.k as f64 / b.delta).ln();
    36.0 * l * l / b.n as f64
}

fn check_prob(prob: f64) -> Result<()> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(invalid("prob", format!("must lie in (0, 1], got {prob}")));
    }
    Ok(())
}

/// `E[1/(X+1)] = (1 - (1-p)^{m+1}) / (p (m+1))` for `X ~ Bin(m, p)`.
pub fn binom_inv_moment(m: u64, prob: f64) -> Result<f64> {
    check_prob(prob)?;
    let m1 = m as f64 + 1.0;
    // 1 - (1-p)^{m+1} without cancellation for small p
    let hit = -(m1 * (-prob).ln_1p()).exp_m1();
    Ok(hit / (prob * m1))
}

/// Upper bound `1 / (p^2 (m+1)(m+2))` on `E[1/((X+1)(X+2))]`.
pub fn binom_inv_moment2_bound(m: u64, prob: f64) -> Result<f64> {
    check_prob(prob)?;
    let m = m as f64;
    Ok(1.0 / (prob * prob * (m + 1.0) * (m + 2.0)))
}

/// Coefficients of the Stirling series for `log n! - log(sqrt(2 pi n) (n/e)^n)`.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// `log n! - (n log n - n + log(2 pi n)/2)`.
fn stirling_error(n: u64) -> f64 {
    let x = n as f64;
    if n < 10 {
        let log_fact: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
        return log_fact - (x * x.ln() - x + 0.5 * (2.0 * PI * x).ln());
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut term = inv;
    let mut acc = 0.0;
    for c in STIRLING {
        acc += c * term;
        term *= inv2;
    }
    acc
}

/// `Pr[Poi(n) = n] = e^{-n} n^n / n!`, evaluated in log space.
pub fn poisson_pmf_at_mean(n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    (-0.5 * (2.0 * PI * n as f64).ln() - stirling_error(n)).exp()
}

/// `Var(N_1 (n0 - N_1)) = (n0^2 - n0)/8` for `N_1 ~ Bin(n0, 1/2)`.
pub fn var_product_split(n0: u64) -> f64 {
    let n0 = n0 as f64;
    (n0 * n0 - n0) / 8.0
}

/// Exact-summation oracles that are evaluated independently of the closed
/// forms above. They back the `facts` check suite.
pub mod exact {
    use super::{check_prob, Result};
    use crate::numeric::compensated_sum;

    /// `Bin(m, prob)` pmf on `0..=m` from log-factorials.
    pub fn binomial_pmf_table(m: u64, prob: f64) -> Vec<f64> {
        let m_us = m as usize;
        if prob == 1.0 {
            let mut v = vec![0.0; m_us + 1];
            v[m_us] = 1.0;
            return v;
        }
        if prob == 0.0 {
            let mut v = vec![0.0; m_us + 1];
            v[0] = 1.0;
            return v;
        }
        let mut log_fact = vec![0.0f64; m_us + 1];
        for i in 1..=m_us {
            log_fact[i] = log_fact[i - 1] + (i as f64).ln();
        }
        let lp = prob.ln();
        let lq = (-prob).ln_1p();
        (0..=m_us)
            .map(|x| {
                let log_c = log_fact[m_us] - log_fact[x] - log_fact[m_us - x];
                (log_c + x as f64 * lp + (m_us - x) as f64 * lq).exp()
            })
            .collect()
    }

    /// `sum_x pmf(x) / (x + 1)`.
    pub fn binom_inv_moment_sum(m: u64, prob: f64) -> Result<f64> {
        check_prob(prob)?;
        let pmf = binomial_pmf_table(m, prob);
        Ok(compensated_sum(
            pmf.iter().enumerate().map(|(x, w)| w / (x as f64 + 1.0)),
        ))
    }

    /// `sum_x pmf(x) / ((x + 1)(x + 2))`.
    pub fn binom_inv_moment2_sum(m: u64, prob: f64) -> Result<f64> {
        check_prob(prob)?;
        let pmf = binomial_pmf_table(m, prob);
        Ok(compensated_sum(pmf.iter().enumerate().map(|(x, w)| {
            let x = x as f64;
            w / ((x + 1.0) * (x + 2.0))
        })))
    }

    /// Variance of `N_1 (n0 - N_1)` for `N_1 ~ Bin(n0, 1/2)` by two-pass
    /// summation over all outcomes with exact integer binomial weights.
    pub fn var_product_split_sum(n0: u64) -> f64 {
        let scale = 2f64.powi(n0 as i32);
        let mut c: u128 = 1;
        let mut weights = Vec::with_capacity(n0 as usize + 1);
        for x in 0..=n0 {
            weights.push(c as f64 / scale);
            c = c * u128::from(n0 - x) / u128::from(x + 1);
        }
        let g = |x: u64| (x * (n0 - x)) as f64;
        let mean = compensated_sum(weights.iter().enumerate().map(|(x, w)| w * g(x as u64)));
        compensated_sum(weights.iter().enumerate().map(|(x, w)| {
            let d = g(x as u64) - mean;
            w * d * d
        }))
    }

    /// For `X` uniform on the integers `a..=b` and `f(x) = log(x + 1)`, returns
    /// `(Var f(X), min f'^2 * Var X)` where the minimum of `f'` over `[a, b]`
    /// is `1/(b + 1)`.
    pub fn log_variance_instance(a: u64, b: u64) -> (f64, f64) {
        let xs: Vec<f64> = (a..=b).map(|x| x as f64).collect();
        let len = xs.len() as f64;
        let var = |vals: &[f64]| {
            let mean = compensated_sum(vals.iter().copied()) / len;
            compensated_sum(vals.iter().map(|v| (v - mean) * (v - mean))) / len
        };
        let fx: Vec<f64> = xs.iter().map(|x| x.ln_1p()).collect();
        let slope = 1.0 / (b as f64 + 1.0);
        (var(&fx), slope * slope * var(&xs))
    }
}
