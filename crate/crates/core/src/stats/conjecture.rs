use serde::Serialize;

use super::beta::fit_beta_mle;
use crate::error::{Error, Result};

pub const MIN_LEVEL_SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub alpha: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub a_plus_b: f64,
    pub empirical_mean: f64,
    /// `a_hat / (a_hat + b_hat)`.
    pub fitted_mean: f64,
    pub samples: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub rows: Vec<ConjectureRow>,
    /// `(max - min) / mean` of `a_hat + b_hat` across levels.
    pub max_relative_deviation_sum: f64,
    /// `max |empirical mean - alpha|`.
    pub max_mean_deviation: f64,
    /// `max |fitted mean - alpha|`.
    pub max_fitted_mean_deviation: f64,
}

impl ConjectureReport {
    /// Columns `alpha,a_hat,b_hat,a_plus_b,empirical_mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,a_hat,b_hat,a_plus_b,empirical_mean\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.alpha, r.a_hat, r.b_hat, r.a_plus_b, r.empirical_mean
            ));
        }
        out
    }
}

/// Fits a beta law at each `alpha` level and summarizes how well
/// `a / (a + b) = alpha` and constancy of `a + b` hold. Rows come out in
/// increasing `alpha`.
pub fn conjecture_report(levels: &[(f64, Vec<f64>)]) -> Result<ConjectureReport> {
    if levels.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: levels.len(),
        });
    }
    let mut rows = Vec::with_capacity(levels.len());
    for (alpha, samples) in levels {
        if samples.len() < MIN_LEVEL_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_LEVEL_SAMPLES,
                got: samples.len(),
            });
        }
        let fit = fit_beta_mle(samples)?;
        rows.push(ConjectureRow {
            alpha: *alpha,
            a_hat: fit.a,
            b_hat: fit.b,
            a_plus_b: fit.a + fit.b,
            empirical_mean: samples.iter().sum::<f64>() / samples.len() as f64,
            fitted_mean: fit.mean(),
            samples: samples.len(),
            converged: fit.converged,
        });
    }
    rows.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));

    let sums: Vec<f64> = rows.iter().map(|r| r.a_plus_b).collect();
    let mean_sum = sums.iter().sum::<f64>() / sums.len() as f64;
    let spread = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_dev = |f: fn(&ConjectureRow) -> f64| {
        rows.iter().map(|r| (f(r) - r.alpha).abs()).fold(0.0, f64::max)
    };
    Ok(ConjectureReport {
        max_relative_deviation_sum: spread / mean_sum,
        max_mean_deviation: max_dev(|r| r.empirical_mean),
        max_fitted_mean_deviation: max_dev(|r| r.fitted_mean),
        rows,
    })
}
