//! Named groups of checks, as run by `klconc check`.

use std::fmt;
use std::str::FromStr;

use super::checks::{
    coupling_diagnostic, expected_kl_check, marginal_gof, poisson_tail_check, verify_thm_bound,
    verify_variance_lb,
};
use super::DistSpec;
use crate::bounds::{self, exact, poisson_pmf_at_mean, var_product_split};
use crate::error::{invalid, Error, Result};

/// One verified claim: what was measured, what it was compared with.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    /// Name of the result being checked.
    pub anchor: &'static str,
    pub claim: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<28} {}: measured {:.6e} vs bound {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.anchor,
            self.claim,
            self.measured,
            self.bound
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Variance,
    Thm,
    PoissonTail,
    Coupling,
    Marginals,
    Expectation,
    Facts,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "all",
        "variance",
        "thm",
        "poisson-tail",
        "coupling",
        "marginals",
        "expectation",
        "facts",
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "variance" => Suite::Variance,
            "thm" => Suite::Thm,
            "poisson-tail" => Suite::PoissonTail,
            "coupling" => Suite::Coupling,
            "marginals" => Suite::Marginals,
            "expectation" => Suite::Expectation,
            "facts" => Suite::Facts,
            other => {
                return Err(invalid(
                    "suite",
                    format!(
                        "unknown suite {other:?}; expected one of {:?}",
                        Suite::NAMES
                    ),
                ))
            }
        })
    }
}

/// Seed plus optional overrides of the default configurations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub k: Option<u64>,
    pub n: Option<u64>,
    pub reps: Option<u64>,
    pub delta: Option<f64>,
    pub prob: Option<f64>,
    pub lambda: Option<f64>,
}

const ANCHOR_VARIANCE: &str = "variance lower bound";
const ANCHOR_THM: &str = "KL deviation bound";
const ANCHOR_TAIL: &str = "Poisson tail radius";
const ANCHOR_COUPLING: &str = "coupling expectation gap";
const ANCHOR_MARGINALS: &str = "coupling marginals";
const ANCHOR_EXPECTATION: &str = "Laplace expected-loss ceiling";
const ANCHOR_INV_MOMENT: &str = "binomial inverse moments";
const ANCHOR_PMF_MEAN: &str = "Poisson mass at the mean";
const ANCHOR_SPLIT: &str = "pair-split variance";
const ANCHOR_SLOPE: &str = "monotone-map variance";

fn pick<T: Copy>(over: Option<T>, defaults: &[T]) -> Vec<T> {
    over.map_or_else(|| defaults.to_vec(), |v| vec![v])
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<CheckLine>> {
    let seed = opts.seed;
    let mut out = Vec::new();
    match suite {
        Suite::All => {
            for s in [
                Suite::Facts,
                Suite::Variance,
                Suite::Thm,
                Suite::PoissonTail,
                Suite::Coupling,
                Suite::Marginals,
                Suite::Expectation,
            ] {
                out.extend(run_suite(s, opts)?);
            }
        }
        Suite::Variance => {
            let configs = match (opts.k, opts.n) {
                (Some(k), Some(n)) => vec![(k, n)],
                (None, None) => vec![(2, 20), (10, 100), (64, 10_240)],
                _ => {
                    return Err(invalid(
                        "k/n",
                        "variance suite needs both --k and --n or neither",
                    ))
                }
            };
            let reps = opts.reps.unwrap_or(100_000);
            for (k, n) in configs {
                let r = verify_variance_lb(k, n, reps, seed)?;
                out.push(CheckLine {
                    anchor: ANCHOR_VARIANCE,
                    claim: format!(
                        "Var KL >= k/(32n^2), k={k} n={n} reps={reps} (ratio {:.2}, 95% CI [{:.3e}, {:.3e}])",
                        r.ratio, r.ci_low, r.ci_high
                    ),
                    measured: r.empirical_var,
                    bound: r.lower_bound,
                    pass: r.pass,
                });
            }
        }
        Suite::Thm => {
            let configs = match (opts.k, opts.n, opts.delta) {
                (Some(k), Some(n), d) => vec![(k, n, d.unwrap_or(0.1))],
                (None, None, None) => vec![(10, 1000, 0.1), (100, 10_000, 0.05)],
                _ => {
                    return Err(invalid(
                        "k/n",
                        "thm suite needs both --k and --n or neither",
                    ))
                }
            };
            let reps = opts.reps.unwrap_or(10_000);
            for (k, n, delta) in configs {
                let r = verify_thm_bound(k, n, reps, delta, seed)?;
                out.push(CheckLine {
                    anchor: ANCHOR_THM,
                    claim: format!(
                        "Pr[KL > mean + t_delta] <= delta, k={k} n={n} delta={delta} (t_delta {:.3e})",
                        r.t_delta
                    ),
                    measured: r.exceed_frac,
                    bound: r.threshold,
                    pass: r.pass,
                });
            }
        }
        Suite::PoissonTail => {
            let reps = opts.reps.unwrap_or(1_000_000);
            for lambda in pick(opts.lambda, &[1.0, 10.0, 100.0, 1e4]) {
                for delta in pick(opts.delta, &[0.05, 0.1, 0.5]) {
                    let r = poisson_tail_check(lambda, delta, reps, seed)?;
                    out.push(CheckLine {
                        anchor: ANCHOR_TAIL,
                        claim: format!(
                            "Pr[|N+1-lambda| > radius] <= delta, lambda={lambda} delta={delta}"
                        ),
                        measured: r.fail_frac,
                        bound: r.threshold,
                        pass: r.pass,
                    });
                }
            }
        }
        Suite::Coupling | Suite::Marginals => {
            let configs = match (opts.n, opts.prob) {
                (Some(n), Some(p)) => vec![(n, p)],
                (None, None) => vec![(20, 0.4), (100, 0.5), (10_000, 0.01)],
                _ => return Err(invalid("n/prob", "needs both --n and --prob or neither")),
            };
            let reps = opts.reps.unwrap_or(1_000_000);
            for (n, prob) in configs {
                if suite == Suite::Coupling {
                    let r = coupling_diagnostic(n, prob, reps, seed)?;
                    out.push(CheckLine {
                        anchor: ANCHOR_COUPLING,
                        claim: format!(
                            "99% CI low of E[(M-M')/(M'+1)] <= 311/n + 160/(n^1.5 p), n={n} p={prob} (estimate {:.3e})",
                            r.est_gap
                        ),
                        measured: r.ci_low,
                        bound: r.bound,
                        pass: r.pass,
                    });
                } else {
                    let r = marginal_gof(n, prob, reps, seed)?;
                    for (what, g) in [("M ~ Bin(n,p)", r.chi2_m), ("M' ~ Poi(np)", r.chi2_mprime)] {
                        out.push(CheckLine {
                            anchor: ANCHOR_MARGINALS,
                            claim: format!(
                                "{what} chi-square p-value, n={n} p={prob} dof={}",
                                g.dof
                            ),
                            measured: g.p_value,
                            bound: super::checks::GOF_SIGNIFICANCE,
                            pass: g.p_value >= super::checks::GOF_SIGNIFICANCE,
                        });
                    }
                }
            }
        }
        Suite::Expectation => {
            let n = opts.n.unwrap_or(1000);
            let reps = opts.reps.unwrap_or(100_000);
            let k = opts.k.unwrap_or(10) as usize;
            for dist in [
                DistSpec::Uniform { k },
                DistSpec::Zipf { k, s: 1.0 },
                DistSpec::TwoPoint { k, mass: 0.99 },
            ] {
                let r = expected_kl_check(&dist, n, reps, seed)?;
                out.push(CheckLine {
                    anchor: ANCHOR_EXPECTATION,
                    claim: format!("mean KL <= (k-1)/n + 3 sd/sqrt(reps), {dist:?} n={n}"),
                    measured: r.mean_kl,
                    bound: r.ceiling + r.slack,
                    pass: r.pass,
                });
            }
        }
        Suite::Facts => out.extend(facts()?),
    }
    Ok(out)
}

/// Probabilities of the inverse-moment grid.
pub(crate) const MOMENT_PROBS: [f64; 5] = [0.01, 0.1, 0.5, 0.9, 1.0];

fn facts() -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();

    let mut worst_rel: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut strict = true;
    for m in 0..=200u64 {
        for &p in &MOMENT_PROBS {
            let closed = bounds::binom_inv_moment(m, p)?;
            let summed = exact::binom_inv_moment_sum(m, p)?;
            worst_rel = worst_rel.max((closed - summed).abs() / summed);
            let second = exact::binom_inv_moment2_sum(m, p)?;
            let bound = bounds::binom_inv_moment2_bound(m, p)?;
            worst_ratio = worst_ratio.max(second / bound);
            // the relative gap is (1-p)^(m+1) (1 + (m+1)p); strictness is
            // only observable where it exceeds rounding noise
            let gap = (1.0 - p).powi(m as i32 + 1) * (1.0 + (m + 1) as f64 * p);
            if gap > 1e-10 && second >= bound {
                strict = false;
            }
        }
    }
    out.push(CheckLine {
        anchor: ANCHOR_INV_MOMENT,
        claim: "E[1/(X+1)] closed form vs exact sum, max relative error, m<=200".into(),
        measured: worst_rel,
        bound: 1e-12,
        pass: worst_rel <= 1e-12,
    });
    out.push(CheckLine {
        anchor: ANCHOR_INV_MOMENT,
        claim: "E[1/((X+1)(X+2))] <= 1/(p^2(m+1)(m+2)), strict where resolvable, max ratio, m<=200"
            .into(),
        measured: worst_ratio,
        bound: 1.0,
        pass: worst_ratio <= 1.0 + 1e-12 && strict,
    });

    let worst = (1..=10_000u64)
        .map(|n| poisson_pmf_at_mean(n) * 3.0 * (n as f64).sqrt())
        .fold(f64::INFINITY, f64::min);
    out.push(CheckLine {
        anchor: ANCHOR_PMF_MEAN,
        claim: "min over n<=1e4 of Pr[Poi(n)=n] * 3 sqrt(n)".into(),
        measured: worst,
        bound: 1.0,
        pass: worst >= 1.0,
    });

    let worst_split = (0..=60u64)
        .map(|n0| {
            let closed = var_product_split(n0);
            let summed = exact::var_product_split_sum(n0);
            (closed - summed).abs() / closed.max(1.0)
        })
        .fold(0.0, f64::max);
    out.push(CheckLine {
        anchor: ANCHOR_SPLIT,
        claim: "Var(N1(n0-N1)) = (n0^2-n0)/8, max relative error, n0<=60".into(),
        measured: worst_split,
        bound: 1e-10,
        pass: worst_split <= 1e-10,
    });

    for (a, b) in [(0u64, 10u64), (5, 50), (0, 100)] {
        let (var_f, lower) = exact::log_variance_instance(a, b);
        out.push(CheckLine {
            anchor: ANCHOR_SLOPE,
            claim: format!("Var log(X+1) >= Var X/(b+1)^2, X ~ U{{{a}..{b}}}"),
            measured: var_f,
            bound: lower,
            pass: var_f >= lower,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facts_pass() {
        let lines = run_suite(Suite::Facts, &SuiteOptions::default()).unwrap();
        assert_eq!(lines.len(), 7);
        for l in &lines {
            assert!(l.pass, "{l}");
        }
    }

    #[test]
    fn parses_suite_names() {
        for name in Suite::NAMES {
            assert!(name.parse::<Suite>().is_ok());
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn overrides_select_single_config() {
        let opts = SuiteOptions {
            seed: 7,
            k: Some(10),
            n: Some(100),
            reps: Some(20_000),
            ..Default::default()
        };
        let lines = run_suite(Suite::Variance, &opts).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].pass);
        let half = SuiteOptions {
            k: Some(10),
            ..Default::default()
        };
        assert!(run_suite(Suite::Variance, &half).is_err());
    }

    #[test]
    fn display_marks_verdict() {
        let l = CheckLine {
            anchor: "x",
            claim: "y".into(),
            measured: 1.0,
            bound: 2.0,
            pass: false,
        };
        assert!(l.to_string().starts_with("[FAIL]"));
    }
}
