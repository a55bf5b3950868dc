//! Loss functions between a true pmf and an estimate.
//!
//! All logarithms are natural. KL sums use compensated summation so the
//! result does not drift with the alphabet size. An infinite divergence is
//! returned as `f64::INFINITY`, never raised as an error.

use crate::dist::{Counts, Pmf};
use crate::error::{invalid, Error, Result};
use crate::numeric::{compensated_sum, NeumaierSum};

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    Ok(())
}

/// `KL(p || q) = sum_i p_i log(p_i / q_i)`.
///
/// Terms with `p_i = 0` contribute nothing, even where `q_i = 0`. Any
/// `p_i > 0` with `q_i = 0` makes the divergence infinite. `q` may be an
/// unnormalized [`Measure`](crate::dist::Measure), in which case the value
/// can be negative.
pub fn kl_divergence(p: &Pmf, q: &(impl AsRef<[f64]> + ?Sized)) -> Result<f64> {
    let q = q.as_ref();
    same_len(p.k(), q.len())?;
    let mut acc = NeumaierSum::new();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc.add(pi * (pi / qi).ln());
    }
    Ok(acc.value())
}

/// The shifted divergence defined on arbitrary nonnegative measures:
///
/// `KL(p || q) + ((n + k)/n) sum q_i + (log(n/(n + k)) - 1) sum p_i`.
///
/// Evaluated as `KL + sum (q_i - p_i) + u sum q_i - log1p(u) sum p_i` with
/// `u = k/n`, which is the same quantity without the cancellation between
/// `(n+k)/n` and `1 + log((n+k)/n)` when `n >> k`.
pub fn kl_tilde(p: &Pmf, q: &(impl AsRef<[f64]> + ?Sized), n: u64, k: u64) -> Result<f64> {
    let q = q.as_ref();
    same_len(p.k(), q.len())?;
    same_len(p.k(), k as usize)?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let kl = kl_divergence(p, q)?;
    if kl.is_infinite() {
        return Ok(kl);
    }
    let u = k as f64 / n as f64;
    let sum_q = compensated_sum(q.iter().copied());
    let sum_p = compensated_sum(p.iter().copied());
    let gap = compensated_sum(q.iter().zip(p.iter()).map(|(qi, pi)| qi - pi));
    Ok(compensated_sum([kl, gap, u * sum_q, -u.ln_1p() * sum_p]))
}

/// `kl_tilde - kl_divergence` when both arguments have unit mass:
/// `(n+k)/n - log((n+k)/n) - 1`, always nonnegative.
pub fn kl_tilde_shift(n: u64, k: u64) -> f64 {
    let u = k as f64 / n as f64;
    (u - u.ln_1p()).max(0.0)
}

/// `l_r` distance; `r = f64::INFINITY` gives the max norm.
pub fn lr_distance(p: &Pmf, q: &Pmf, r: f64) -> Result<f64> {
    same_len(p.k(), q.k())?;
    if r.is_nan() || r < 1.0 {
        return Err(invalid("r", format!("must be >= 1, got {r}")));
    }
    let diffs = p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs());
    if r.is_infinite() {
        return Ok(diffs.fold(0.0, f64::max));
    }
    if r == 1.0 {
        return Ok(compensated_sum(diffs));
    }
    Ok(compensated_sum(diffs.map(|d| d.powf(r))).powf(1.0 / r))
}

/// Per-symbol summand of `kl_tilde(p, pseudo_estimate)`:
/// `p_i log(n p_i / (N'_i + 1)) + (N'_i + 1)/n - p_i`.
///
/// With `a = (N'_i + 1)/n` this is `a * phi(p_i / a)` for the convex
/// `phi(x) = x log x - x + 1`, so it is never negative.
pub fn poissonized_term(p_i: f64, count: u64, n: u64) -> f64 {
    let a = (count as f64 + 1.0) / n as f64;
    if p_i == 0.0 {
        return a;
    }
    let e = (p_i - a) / a;
    a * ((1.0 + e) * e.ln_1p() - e)
}

/// `kl_tilde(p, pseudo_estimate(c, n))` written as a sum of [`poissonized_term`]s.
pub fn kl_tilde_poissonized(p: &Pmf, c: &Counts, n: u64) -> Result<f64> {
    same_len(p.k(), c.k())?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(compensated_sum(
        p.iter()
            .zip(c.counts())
            .map(|(&pi, &ni)| poissonized_term(pi, ni, n)),
    ))
}

/// Same sum with every term clipped to `[0, alpha]`. Changing one count
/// moves this function by at most `alpha`.
pub fn clipped_kl_tilde(p: &Pmf, c: &Counts, n: u64, alpha: f64) -> Result<f64> {
    same_len(p.k(), c.k())?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(compensated_sum(p.iter().zip(c.counts()).map(
        |(&pi, &ni)| poissonized_term(pi, ni, n).clamp(0.0, alpha),
    )))
}

/// The offset `log(1 + n/k)` of the uniform-p decomposition.
pub fn uniform_laplace_offset(n: u64, k: u64) -> f64 {
    (n as f64 / k as f64).ln_1p()
}

/// KL from the uniform pmf to the Laplace estimate, via
/// `-(1/k) sum log(N_i + 1) + log(1 + n/k)` with `n = c.total()`.
pub fn uniform_laplace_kl(c: &Counts) -> f64 {
    let k = c.k() as u64;
    let logs = compensated_sum(c.counts().iter().map(|&x| (x as f64).ln_1p()));
    compensated_sum([-logs / k as f64, uniform_laplace_offset(c.total(), k)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_pmf, uniform_pmf, Measure};

    fn pmf(v: &[f64]) -> Pmf {
        make_pmf(v).unwrap()
    }

    #[test]
    fn kl_examples() {
        let u = uniform_pmf(5).unwrap();
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);

        let n = 2.0;
        let q = pmf(&[(n + 1.0) / (n + 2.0), 1.0 / (n + 2.0)]);
        let expected = 2f64.ln() - 0.5 * 3f64.ln();
        let also = (n + 2.0f64).ln() + 0.5f64.ln() - 0.5 * (n + 1.0f64).ln();
        let got = kl_divergence(&pmf(&[0.5, 0.5]), &q).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - also).abs() < 1e-15);

        assert!(
            (kl_divergence(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap() - 2f64.ln()).abs()
                < 1e-16
        );
        assert_eq!(
            kl_divergence(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0])).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            kl_divergence(&pmf(&[1.0, 0.0]), &pmf(&[1.0, 0.0])).unwrap(),
            0.0
        );
        assert!(kl_divergence(&pmf(&[1.0]), &pmf(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn kl_against_heavy_measure_can_be_negative() {
        let q = Measure::new(vec![1.0, 1.0]).unwrap();
        let got = kl_divergence(&pmf(&[0.5, 0.5]), &q).unwrap();
        assert!((got + 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn kl_tilde_examples() {
        let u = uniform_pmf(4).unwrap();
        let got = kl_tilde(&u, &u, 4, 4).unwrap();
        assert!((got - (1.0 - 2f64.ln())).abs() < 1e-15);

        let got = kl_tilde(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5]), 2, 2).unwrap();
        assert!((got - 1.0).abs() < 1e-15);

        let inf = kl_tilde(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0]), 2, 2).unwrap();
        assert_eq!(inf, f64::INFINITY);
        assert!(kl_tilde(&u, &u, 4, 3).is_err());
    }

    #[test]
    fn shift_examples() {
        let half = 1.0 - 2f64.ln();
        assert!((kl_tilde_shift(7, 7) - half).abs() < 1e-15);
        assert!((kl_tilde_shift(1, 1) - half).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for n in (10..10_000).step_by(97) {
            let s = kl_tilde_shift(n, 10);
            assert!(s >= 0.0 && s < prev);
            prev = s;
        }
        assert!(kl_tilde_shift(1 << 40, 10) < 1e-20);
    }

    #[test]
    fn lr_examples() {
        let p = pmf(&[1.0, 0.0]);
        let q = pmf(&[0.0, 1.0]);
        for r in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(lr_distance(&p, &p, r).unwrap(), 0.0);
        }
        assert_eq!(lr_distance(&p, &q, 1.0).unwrap(), 2.0);
        assert!((lr_distance(&p, &q, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lr_distance(&p, &q, f64::INFINITY).unwrap(), 1.0);
        assert!(lr_distance(&p, &q, 0.5).is_err());
        assert!(lr_distance(&p, &q, f64::NAN).is_err());
    }

    #[test]
    fn poissonized_term_matches_direct_form() {
        for &(p, c, n) in &[
            (0.3, 5u64, 20u64),
            (0.01, 0, 1000),
            (0.5, 49, 100),
            (0.0, 3, 10),
        ] {
            let a = (c as f64 + 1.0) / n as f64;
            let direct = if p == 0.0 {
                a
            } else {
                p * (n as f64 * p / (c as f64 + 1.0)).ln() + a - p
            };
            let got = poissonized_term(p, c, n);
            assert!(
                (got - direct).abs() <= 1e-14 * direct.abs().max(a),
                "{p} {c} {n}"
            );
            assert!(got >= 0.0);
        }
    }

    #[test]
    fn clipping_bounds_each_term() {
        let p = pmf(&[0.5, 0.5]);
        let c = Counts::new(vec![100, 0]).unwrap();
        let full = kl_tilde_poissonized(&p, &c, 10).unwrap();
        let clipped = clipped_kl_tilde(&p, &c, 10, 0.1).unwrap();
        assert!(clipped <= 0.2 && clipped < full);
    }

    #[test]
    fn uniform_offset_value() {
        assert!((uniform_laplace_offset(10, 10) - 2f64.ln()).abs() < 1e-16);
        let c = Counts::new(vec![1, 1]).unwrap();
        assert!(uniform_laplace_kl(&c).abs() < 1e-16);
    }
}
