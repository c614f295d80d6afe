use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};

use super::beta::{beta_log_likelihood, clamp_unit, fit_beta_mle, BetaFit};
use super::special::standard_normal_cdf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalFit {
    pub mu: f64,
    /// Maximum-likelihood (biased, `1/n`) standard deviation.
    pub sigma: f64,
    /// Set when `sigma == 0`.
    pub degenerate: bool,
}

impl NormalFit {
    pub fn cdf(&self, x: f64) -> f64 {
        if self.degenerate {
            return if x < self.mu { 0.0 } else { 1.0 };
        }
        standard_normal_cdf((x - self.mu) / self.sigma)
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        if self.degenerate {
            return f64::INFINITY;
        }
        let n = samples.len() as f64;
        let ss: f64 = samples.iter().map(|x| (x - self.mu).powi(2)).sum();
        -0.5 * n * (2.0 * PI * self.sigma * self.sigma).ln() - ss / (2.0 * self.sigma * self.sigma)
    }
}

pub fn fit_normal(samples: &[f64]) -> Result<NormalFit> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let sigma = (samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
    Ok(NormalFit {
        mu,
        sigma,
        degenerate: sigma == 0.0,
    })
}

/// Kolmogorov-Smirnov distance `sup_x |F_n(x) - F(x)|` between the sample's
/// empirical CDF and `cdf`.
///
/// Both sides of every jump of `F_n` are compared, using `F` just below
/// each sample point for the left limit, so step CDFs with jumps at the
/// sample points are handled as well as continuous ones.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d
            .max((at - cdf(x)).abs())
            .max((below - cdf(x.next_down())).abs());
        i = j;
    }
    Ok(d.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofReport {
    pub beta: BetaFit,
    pub normal: NormalFit,
    pub ks_beta: f64,
    pub ks_normal: f64,
    pub loglik_beta: f64,
    pub loglik_normal: f64,
    pub aic_beta: f64,
    pub aic_normal: f64,
}

impl GofReport {
    /// `{"beta": {a, b, loglik, ks, aic}, "normal": {mu, sigma, loglik, ks, aic}}`.
    pub fn to_json(&self) -> Value {
        json!({
            "beta": {
                "a": self.beta.a,
                "b": self.beta.b,
                "loglik": self.loglik_beta,
                "ks": self.ks_beta,
                "aic": self.aic_beta,
            },
            "normal": {
                "mu": self.normal.mu,
                "sigma": self.normal.sigma,
                "loglik": self.loglik_normal,
                "ks": self.ks_normal,
                "aic": self.aic_normal,
            },
        })
    }
}

/// Fits both candidate laws and compares them by KS distance and AIC.
pub fn goodness_of_fit(samples: &[f64]) -> Result<GofReport> {
    let beta = fit_beta_mle(samples)?;
    let normal = fit_normal(samples)?;
    let clamped: Vec<f64> = samples.iter().map(|&x| clamp_unit(x)).collect();
    let loglik_beta = beta_log_likelihood(&clamped, beta.a, beta.b);
    let loglik_normal = normal.log_likelihood(samples);
    Ok(GofReport {
        ks_beta: ks_statistic(&clamped, |x| beta.cdf(x))?,
        ks_normal: ks_statistic(samples, |x| normal.cdf(x))?,
        beta,
        normal,
        loglik_beta,
        loglik_normal,
        aic_beta: 4.0 - 2.0 * loglik_beta,
        aic_normal: 4.0 - 2.0 * loglik_normal,
    })
}
