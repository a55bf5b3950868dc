//! Seeded exact random generation.
//!
//! Every trial owns a [`TrialRng`] derived from `(master_seed, trial_index)`:
//! the master seed keys a ChaCha8 generator and the trial index selects its
//! 64-bit stream. Streams never depend on the order in which trials are
//! scheduled, so experiment output is independent of the thread count.
//!
//! Binomial and Poisson draws are exact (inversion, BTPE and transformed
//! rejection from `rand_distr`); no normal approximation is used anywhere.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::dist::{Counts, Pmf};
use crate::error::{invalid, Result};

/// Deterministic per-trial generator.
#[derive(Debug, Clone)]
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    /// Generator keyed by `seed` on stream `stream`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        TrialRng(inner)
    }
}

impl RngCore for TrialRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// The generator for trial `trial_index` of an experiment seeded by `master_seed`.
pub fn derive_trial_rng(master_seed: u64, trial_index: u64) -> TrialRng {
    TrialRng::new(master_seed, trial_index)
}

/// A generator for an auxiliary purpose (bootstrap, diagnostics) that must
/// not share streams with the trials of the same seed.
pub fn derive_aux_rng(master_seed: u64, purpose: u64, index: u64) -> TrialRng {
    TrialRng::new(sub_seed(master_seed, purpose), index)
}

/// Seed of a sub-experiment tagged `tag`: splitmix64 finalizer of the pair.
pub fn sub_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exact `Bin(m, prob)` draw.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, m: u64, prob: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(invalid("prob", format!("must lie in [0, 1], got {prob}")));
    }
    Ok(binomial_unchecked(rng, m, prob))
}

fn binomial_unchecked<R: Rng + ?Sized>(rng: &mut R, m: u64, prob: f64) -> u64 {
    if m == 0 || prob == 0.0 {
        return 0;
    }
    if prob == 1.0 {
        return m;
    }
    Binomial::new(m, prob)
        .expect("parameters validated")
        .sample(rng)
}

/// Largest Poisson mean accepted by [`poisson`].
pub const MAX_LAMBDA: f64 = 1e15;

/// Exact `Poi(lambda)` draw.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> Result<u64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(
            "lambda",
            format!("must be finite and >= 0, got {lambda}"),
        ));
    }
    if lambda > MAX_LAMBDA {
        return Err(invalid("lambda", format!("exceeds {MAX_LAMBDA:e}")));
    }
    Ok(poisson_unchecked(rng, lambda))
}

fn poisson_unchecked<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(lambda)
        .expect("parameters validated")
        .sample(rng);
    x as u64
}

/// `Mult(n, p)` counts by sequential conditional binomials.
pub fn multinomial_counts<R: Rng + ?Sized>(rng: &mut R, p: &Pmf, n: u64) -> Counts {
    let mut counts = vec![0u64; p.k()];
    let mut remaining = n;
    let mut mass_left = 1.0;
    let last = p.k() - 1;
    for (i, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining;
            break;
        }
        let cond = if mass_left <= 0.0 {
            1.0
        } else {
            (pi / mass_left).min(1.0)
        };
        let draw = binomial_unchecked(rng, remaining, cond);
        counts[i] = draw;
        remaining -= draw;
        mass_left -= pi;
    }
    Counts::from_parts_unchecked(counts, n)
}

/// Poissonized counts: `N_i ~ Poi(n p_i)` independently, total `N = sum N_i`.
///
/// This has the same law as drawing `N ~ Poi(n)` and then `Mult(N, p)`.
pub fn poissonized_counts<R: Rng + ?Sized>(rng: &mut R, p: &Pmf, n: u64) -> Result<Counts> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let counts: Vec<u64> = p
        .iter()
        .map(|&pi| poisson_unchecked(rng, n as f64 * pi))
        .collect();
    let total = counts.iter().sum();
    Ok(Counts::from_parts_unchecked(counts, total))
}

/// One draw of the binomial/Poisson coupling.
///
/// `n_latent ~ Poi(n)`, `x ~ Bin(min(n_latent, n), p)` and
/// `y ~ Bin(|n - n_latent|, p)`. If `n_latent > n` then `m = x` and
/// `m_prime = x + y`, otherwise `m = x + y` and `m_prime = x`; so `m` is
/// `Bin(n, p)` and `m_prime` is `Poi(n p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledPair {
    pub m: u64,
    pub m_prime: u64,
    pub n_latent: u64,
    pub x: u64,
    pub y: u64,
}

impl CoupledPair {
    /// `(m - m_prime) / (m_prime + 1)`, the quantity whose mean bounds the
    /// binomial/Poisson expectation gap of `log(count + 1)`.
    pub fn gap_ratio(&self) -> f64 {
        (self.m as f64 - self.m_prime as f64) / (self.m_prime as f64 + 1.0)
    }
}

pub fn coupled_pair<R: Rng + ?Sized>(rng: &mut R, n: u64, prob: f64) -> Result<CoupledPair> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(invalid("prob", format!("must lie in (0, 1], got {prob}")));
    }
    let n_latent = poisson_unchecked(rng, n as f64);
    let x = binomial_unchecked(rng, n_latent.min(n), prob);
    let y = binomial_unchecked(rng, n.abs_diff(n_latent), prob);
    let (m, m_prime) = if n_latent > n { (x, x + y) } else { (x + y, x) };
    Ok(CoupledPair {
        m,
        m_prime,
        n_latent,
        x,
        y,
    })
}
