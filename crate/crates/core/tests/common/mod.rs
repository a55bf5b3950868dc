//! Identity checks shared by the property tests and the acceptance gate.
//! Each returns the observed error relative to the scale of the terms that
//! were summed, so callers compare it against a fixed relative tolerance.

#![allow(dead_code)]

use klconc::dist::{add_t_estimate, laplace_estimate, make_pmf, pseudo_estimate, uniform_pmf};
use klconc::losses::{
    kl_divergence, kl_tilde, kl_tilde_poissonized, kl_tilde_shift, poissonized_term,
    uniform_laplace_kl, uniform_laplace_offset,
};
use klconc::{Counts, Pmf};

pub const REL_TOL: f64 = 1e-12;

/// Normalizes raw nonnegative weights; at least one must be positive.
pub fn pmf_from_raw(raw: &[f64]) -> Pmf {
    let s: f64 = raw.iter().sum();
    make_pmf(&raw.iter().map(|w| w / s).collect::<Vec<_>>()).unwrap()
}

/// `kl_tilde - kl` against the closed-form shift, for unit-mass `q`.
/// The inputs carry unit mass, so the scale is at least one.
pub fn shift_identity_error(p: &Pmf, q: &Pmf, n: u64) -> f64 {
    let k = p.k() as u64;
    let kl = kl_divergence(p, q).unwrap();
    let tilde = kl_tilde(p, q, n, k).unwrap();
    let shift = kl_tilde_shift(n, k);
    let u = k as f64 / n as f64;
    let scale = 1f64.max(kl.abs()).max(u);
    ((tilde - kl) - shift).abs() / scale
}

/// Direct KL from uniform to the Laplace estimate against the log-count form.
pub fn uniform_decomposition_error(counts: &[u64]) -> f64 {
    let c = Counts::new(counts.to_vec()).unwrap();
    let p = uniform_pmf(c.k()).unwrap();
    let direct = kl_divergence(&p, &laplace_estimate(&c)).unwrap();
    let viaform = uniform_laplace_kl(&c);
    let scale = direct
        .abs()
        .max(uniform_laplace_offset(c.total(), c.k() as u64));
    if scale == 0.0 {
        return (direct - viaform).abs();
    }
    (direct - viaform).abs() / scale
}

/// Most negative per-symbol term relative to its size, and the largest
/// relative disagreement with the textbook form of the same term.
pub fn per_term_errors(p: &Pmf, counts: &[u64], n: u64) -> (f64, f64) {
    let mut worst_sign: f64 = 0.0;
    let mut worst_form: f64 = 0.0;
    for (&pi, &ci) in p.iter().zip(counts) {
        let term = poissonized_term(pi, ci, n);
        let a = (ci as f64 + 1.0) / n as f64;
        let scale = pi + a;
        worst_sign = worst_sign.max(-term / scale);
        let textbook = if pi == 0.0 {
            a
        } else {
            pi * (n as f64 * pi / (ci as f64 + 1.0)).ln() + a - pi
        };
        let form_scale = scale + (pi * (pi / a).ln()).abs();
        worst_form = worst_form.max((term - textbook).abs() / form_scale);
    }
    (worst_sign, worst_form)
}

/// Mass of the pseudo-estimate against `(N + k)/(n + k)`, plus agreement
/// of the generic shifted divergence with its per-term form.
pub fn pseudo_errors(p: &Pmf, counts: &[u64], n: u64) -> (f64, f64) {
    let c = Counts::new(counts.to_vec()).unwrap();
    let k = c.k() as u64;
    let m = pseudo_estimate(&c, n).unwrap();
    let expected = (c.total() + k) as f64 / (n + k) as f64;
    let mass_err = (m.total_mass() - expected).abs() / expected;

    let generic = kl_tilde(p, &m, n, k).unwrap();
    let per_term = kl_tilde_poissonized(p, &c, n).unwrap();
    let scale: f64 = p
        .iter()
        .zip(counts)
        .map(|(&pi, &ci)| poissonized_term(pi, ci, n).abs() + pi + (ci as f64 + 1.0) / n as f64)
        .sum();
    (mass_err, (generic - per_term).abs() / scale)
}

/// Add-t estimates have unit mass and are monotone in the counts.
pub fn add_t_ok(counts: &[u64], t: f64) -> bool {
    let c = Counts::new(counts.to_vec()).unwrap();
    let q = add_t_estimate(&c, t).unwrap();
    let mass: f64 = q.iter().sum();
    if (mass - 1.0).abs() > 1e-12 {
        return false;
    }
    counts.iter().zip(q.iter()).all(|(&ci, &qi)| {
        counts
            .iter()
            .zip(q.iter())
            .all(|(&cj, &qj)| ci <= cj || qi > qj)
    })
}
