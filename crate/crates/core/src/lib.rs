//! Concentration of the KL loss of the Laplace (add-one) estimator.
//!
//! The crate provides the estimators and losses, exact seeded samplers, the
//! closed-form deviation and variance bounds, and a deterministic parallel
//! Monte Carlo harness that checks the bounds empirically.
//!
//! ```
//! use klconc::{harness, dist, losses};
//!
//! let p = dist::uniform_pmf(4).unwrap();
//! let counts = dist::Counts::new(vec![3, 0, 1, 0]).unwrap();
//! let q = dist::laplace_estimate(&counts);
//! assert!(losses::kl_divergence(&p, &q).unwrap() >= 0.0);
//!
//! let cfg = harness::ExperimentConfig::new(harness::DistSpec::Uniform { k: 4 }, 100, 500, 1);
//! let summary = harness::run_kl_trials(&cfg).unwrap();
//! assert!(summary.mean_kl > 0.0);
//! ```

pub mod bounds;
pub mod dist;
pub mod error;
pub mod harness;
pub mod losses;
pub mod numeric;
pub mod report;
pub mod sampling;

pub use dist::{Counts, Measure, Pmf};
pub use error::{Error, Result};
