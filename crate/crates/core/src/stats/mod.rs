//! Distribution fitting for limit-belief samples.
//!
//! The special functions are implemented here rather than pulled from a
//! crate; `statrs` is used only as a cross-check in tests.

mod beta;
mod conjecture;
mod gof;
pub mod special;

pub use beta::{
    beta_log_likelihood, beta_score, clamp_unit, fit_beta_mle, method_of_moments, BetaFit, CLAMP_EPS,
    GRADIENT_TOL, MAX_ITERATIONS,
};
pub use conjecture::{conjecture_report, ConjectureReport, ConjectureRow, MIN_LEVEL_SAMPLES};
pub use gof::{fit_normal, goodness_of_fit, ks_statistic, GofReport, NormalFit};
pub use special::{digamma, log_beta_fn, regularized_incomplete_beta, trigamma};
