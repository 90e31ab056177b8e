//! Probabilistic cost analysis of the in-situ cycle-leader permutation
//! algorithm.
//!
//! * [`recurrence`]: exact laws and moments of the major cost `X_n`.
//! * [`algorithm`]: the in-place algorithm itself, instrumented, with a
//!   brute-force oracle over all permutations.
//! * [`limit`]: the limit law of `(X_n - E X_n) / n` and its constants.
//! * [`metrics`]: minimal `l_p` distances, the Zolotarev `zeta_3` bounds and
//!   the convergence-rate series.

pub mod algorithm;
pub mod error;
pub mod limit;
pub mod metrics;
pub mod recurrence;
pub mod sample_stats;
pub mod streams;
pub mod summation;

pub use error::{Error, Result};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Variance of the limit law, `2 - pi^2 / 6`.
pub const SIGMA2: f64 = 2.0 - std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// `E Y^3` of the limit law, computed by `limit::limit_constants` and
/// confirmed with 40-digit quadrature. Reference value for reports.
pub const M3_REFERENCE: f64 = 0.154_113_806_319_188_57;
