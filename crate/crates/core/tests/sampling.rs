//! Distributional tests of the samplers against exact pmfs.

use klconc::bounds::exact::binomial_pmf_table;
use klconc::dist::{make_pmf, uniform_pmf};
use klconc::harness::marginal_gof;
use klconc::numeric::{chi_square_gof, histogram, kolmogorov_distance, RunningStats};
use klconc::sampling::{
    binomial, derive_trial_rng, multinomial_counts, poisson, poissonized_counts, TrialRng,
};
use rayon::prelude::*;
use statrs::distribution::{Discrete, Poisson};

const SIGNIFICANCE: f64 = 1e-3;
const BLOCK: u64 = 10_000;

/// `draws` values from `sample`, each block of `BLOCK` on its own stream.
fn draw_histogram(seed: u64, draws: u64, sample: impl Fn(&mut TrialRng) -> u64 + Sync) -> Vec<u64> {
    let blocks: Vec<Vec<u64>> = (0..draws.div_ceil(BLOCK) as usize)
        .into_par_iter()
        .map(|b| {
            let mut rng = derive_trial_rng(seed, b as u64);
            let len = BLOCK.min(draws - b as u64 * BLOCK);
            histogram((0..len).map(|_| sample(&mut rng)))
        })
        .collect();
    let width = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let mut total = vec![0u64; width];
    for h in blocks {
        for (t, c) in total.iter_mut().zip(h) {
            *t += c;
        }
    }
    total
}

fn poisson_pmf(lambda: f64) -> impl Fn(u64) -> f64 {
    let d = Poisson::new(lambda).unwrap();
    move |x| d.pmf(x)
}

fn cdf_from(pmf: impl Fn(u64) -> f64, upto: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..=upto as u64)
        .map(|x| {
            acc += pmf(x);
            acc.min(1.0)
        })
        .collect()
}

#[test]
fn binomial_gof_large_m() {
    let h = draw_histogram(101, 1_000_000, |r| binomial(r, 10_000, 0.3).unwrap());
    let table = binomial_pmf_table(10_000, 0.3);
    let g = chi_square_gof(&h, |x| table.get(x as usize).copied().unwrap_or(0.0));
    assert!(g.p_value >= SIGNIFICANCE, "{g:?}");
    assert!(g.dof > 50);
}

#[test]
fn poisson_gof_small_mean() {
    let h = draw_histogram(102, 1_000_000, |r| poisson(r, 4.0).unwrap());
    let g = chi_square_gof(&h, poisson_pmf(4.0));
    assert!(g.p_value >= SIGNIFICANCE, "{g:?}");
}

#[test]
fn poisson_large_mean_clt() {
    let stats: RunningStats = (0..100_000u64)
        .map(|i| poisson(&mut derive_trial_rng(103, i), 1e6).unwrap() as f64)
        .collect();
    let tol = 4.0 * (1e6f64 / 1e5).sqrt();
    assert!((stats.mean() - 1e6).abs() <= tol, "mean {}", stats.mean());
}

#[test]
fn kolmogorov_distance_golden_sets() {
    let draws = 10_000_000;
    let cases: Vec<(&str, Vec<u64>, Vec<f64>)> = vec![
        {
            let h = draw_histogram(104, draws, |r| binomial(r, 10_000, 0.3).unwrap());
            let t = binomial_pmf_table(10_000, 0.3);
            let cdf = cdf_from(|x| t[x as usize], h.len());
            ("Bin(1e4, 0.3)", h, cdf)
        },
        {
            let h = draw_histogram(105, draws, |r| binomial(r, 20, 0.4).unwrap());
            let t = binomial_pmf_table(20, 0.4);
            let cdf = cdf_from(|x| t.get(x as usize).copied().unwrap_or(0.0), h.len());
            ("Bin(20, 0.4)", h, cdf)
        },
        {
            let h = draw_histogram(106, draws, |r| poisson(r, 4.0).unwrap());
            let cdf = cdf_from(poisson_pmf(4.0), h.len());
            ("Poi(4)", h, cdf)
        },
        {
            let h = draw_histogram(107, draws, |r| poisson(r, 100.0).unwrap());
            let cdf = cdf_from(poisson_pmf(100.0), h.len());
            ("Poi(100)", h, cdf)
        },
    ];
    for (name, h, cdf) in cases {
        let d = kolmogorov_distance(&h, |x| cdf[x as usize]);
        assert!(d < 1e-3, "{name}: distance {d}");
    }
}

#[test]
fn multinomial_marginal_is_binomial() {
    let p = make_pmf(&[0.5, 0.5]).unwrap();
    let h = draw_histogram(108, 100_000, |r| {
        multinomial_counts(r, &p, 10_000).counts()[0]
    });
    let table = binomial_pmf_table(10_000, 0.5);
    let g = chi_square_gof(&h, |x| table.get(x as usize).copied().unwrap_or(0.0));
    assert!(g.p_value >= SIGNIFICANCE, "{g:?}");
}

#[test]
fn multinomial_three_way_marginals() {
    let p = make_pmf(&[0.2, 0.3, 0.5]).unwrap();
    for (i, &pi) in [0.2, 0.3, 0.5].iter().enumerate() {
        let h = draw_histogram(109, 200_000, |r| multinomial_counts(r, &p, 60).counts()[i]);
        let table = binomial_pmf_table(60, pi);
        let g = chi_square_gof(&h, |x| table.get(x as usize).copied().unwrap_or(0.0));
        assert!(g.p_value >= SIGNIFICANCE, "symbol {i}: {g:?}");
    }
}

#[test]
fn poissonized_counts_uncorrelated() {
    let p = uniform_pmf(2).unwrap();
    let pairs: Vec<(f64, f64)> = (0..1_000_000u64)
        .into_par_iter()
        .map(|i| {
            let c = poissonized_counts(&mut derive_trial_rng(110, i), &p, 100).unwrap();
            (c.counts()[0] as f64, c.counts()[1] as f64)
        })
        .collect();
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let r = sxy / (sxx * syy).sqrt();
    assert!(r.abs() < 0.01, "correlation {r}");
}

#[test]
fn poissonized_marginal_is_poisson() {
    let p = make_pmf(&[0.3, 0.7]).unwrap();
    let h = draw_histogram(111, 1_000_000, |r| {
        poissonized_counts(r, &p, 50).unwrap().counts()[0]
    });
    let g = chi_square_gof(&h, poisson_pmf(15.0));
    assert!(g.p_value >= SIGNIFICANCE, "{g:?}");
}

#[test]
fn poissonized_total_is_poisson() {
    let p = make_pmf(&[0.1, 0.2, 0.3, 0.4]).unwrap();
    let h = draw_histogram(112, 500_000, |r| {
        poissonized_counts(r, &p, 30).unwrap().total()
    });
    let g = chi_square_gof(&h, poisson_pmf(30.0));
    assert!(g.p_value >= SIGNIFICANCE, "{g:?}");
}

#[test]
fn coupling_marginals_small_case() {
    let r = marginal_gof(20, 0.4, 1_000_000, 113).unwrap();
    assert!(r.pass, "{r:?}");
}
