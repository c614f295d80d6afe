use serde::Serialize;

use super::special::{digamma_unchecked, log_beta_fn, regularized_incomplete_beta, trigamma_unchecked};
use crate::error::{Error, Result};

/// Samples are clamped into `[CLAMP_EPS, 1 - CLAMP_EPS]` before taking logs.
pub const CLAMP_EPS: f64 = 1e-9;
pub const MIN_FIT_SAMPLES: usize = 10;
/// Convergence threshold on the per-observation score.
pub const GRADIENT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;
/// Above this Hessian condition number Newton gives way to coordinate bisection.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaFit {
    pub a: f64,
    pub b: f64,
    /// Total log-likelihood of the (clamped) sample.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the per-observation score at `(a, b)`.
    pub gradient_norm: f64,
}

impl BetaFit {
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        regularized_incomplete_beta(x.clamp(0.0, 1.0), self.a, self.b).unwrap_or(f64::NAN)
    }
}

/// Sample means of `ln x` and `ln(1 - x)`: all the likelihood needs.
#[derive(Debug, Clone, Copy)]
struct LogMoments {
    n: usize,
    ln_x: f64,
    ln_1mx: f64,
}

impl LogMoments {
    fn new(samples: &[f64]) -> Self {
        let (mut sx, mut s1x) = (0.0, 0.0);
        for &x in samples {
            let x = clamp_unit(x);
            sx += x.ln();
            s1x += (1.0 - x).ln();
        }
        let n = samples.len();
        Self {
            n,
            ln_x: sx / n as f64,
            ln_1mx: s1x / n as f64,
        }
    }

    fn mean_log_likelihood(&self, a: f64, b: f64) -> f64 {
        (a - 1.0) * self.ln_x + (b - 1.0) * self.ln_1mx
            - log_beta_fn(a, b).unwrap_or(f64::INFINITY)
    }

    fn mean_score(&self, a: f64, b: f64) -> [f64; 2] {
        let common = digamma_unchecked(a + b);
        [
            self.ln_x - digamma_unchecked(a) + common,
            self.ln_1mx - digamma_unchecked(b) + common,
        ]
    }
}

pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    if let Some(x) = samples.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("beta samples must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// Total beta log-likelihood of the clamped sample.
pub fn beta_log_likelihood(samples: &[f64], a: f64, b: f64) -> f64 {
    let m = LogMoments::new(samples);
    m.n as f64 * m.mean_log_likelihood(a, b)
}

/// Gradient of the total log-likelihood with respect to `(a, b)`.
pub fn beta_score(samples: &[f64], a: f64, b: f64) -> [f64; 2] {
    let m = LogMoments::new(samples);
    let [ga, gb] = m.mean_score(a, b);
    [m.n as f64 * ga, m.n as f64 * gb]
}

/// Method-of-moments estimate, used as the Newton starting point.
pub fn method_of_moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| clamp_unit(x)).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|&x| (clamp_unit(x) - mean).powi(2))
        .sum::<f64>()
        / n;
    let mut common = mean * (1.0 - mean) / var - 1.0;
    if !(common.is_finite() && common > 0.0) {
        common = 1.0;
    }
    (mean * common, (1.0 - mean) * common)
}

/// Maximum-likelihood beta fit by Newton's method on the two score
/// equations, started from the method of moments.
///
/// Steps are halved until they stay in the positive quadrant and do not
/// lower the likelihood (which is concave in `(a, b)`). When the Hessian is
/// ill-conditioned the iteration falls back to solving each score equation
/// in turn by bisection. Once the score is below [`GRADIENT_TOL`] a few
/// extra Newton steps polish the root to machine precision.
pub fn fit_beta_mle(samples: &[f64]) -> Result<BetaFit> {
    check_samples(samples)?;
    let clamped: Vec<f64> = samples.iter().map(|&x| clamp_unit(x)).collect();
    let (lo, hi) = clamped
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo == hi {
        return Err(Error::FitFailed(format!(
            "all {} samples equal {lo}; the beta likelihood is unbounded",
            samples.len()
        )));
    }

    let m = LogMoments::new(&clamped);
    let (mut a, mut b) = method_of_moments(&clamped);
    let mut ll = m.mean_log_likelihood(a, b);
    let mut iterations = 0;
    let mut polish = 0;

    while iterations < MAX_ITERATIONS {
        let g = m.mean_score(a, b);
        let gnorm = g[0].abs().max(g[1].abs());
        if gnorm < GRADIENT_TOL {
            polish += 1;
            if polish > 3 || gnorm == 0.0 {
                break;
            }
        }
        iterations += 1;

        let tab = trigamma_unchecked(a + b);
        let h = [
            [tab - trigamma_unchecked(a), tab],
            [tab, tab - trigamma_unchecked(b)],
        ];
        if condition_number(&h) > MAX_CONDITION {
            (a, b) = bisection_sweep(&m, a, b);
            ll = m.mean_log_likelihood(a, b);
            continue;
        }

        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let da = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let db = -(-h[1][0] * g[0] + h[0][0] * g[1]) / det;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (na, nb) = (a + scale * da, b + scale * db);
            if na > 0.0 && nb > 0.0 {
                let nll = m.mean_log_likelihood(na, nb);
                if nll >= ll - 1e-14 * ll.abs().max(1.0) {
                    (a, b, ll) = (na, nb, nll);
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            (a, b) = bisection_sweep(&m, a, b);
            ll = m.mean_log_likelihood(a, b);
        }
    }

    let g = m.mean_score(a, b);
    let gradient_norm = g[0].abs().max(g[1].abs());
    Ok(BetaFit {
        a,
        b,
        log_likelihood: m.n as f64 * ll,
        iterations,
        converged: gradient_norm < GRADIENT_TOL,
        gradient_norm,
    })
}

fn condition_number(h: &[[f64; 2]; 2]) -> f64 {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (l1, l2) = ((0.5 * tr + disc).abs(), (0.5 * tr - disc).abs());
    let (big, small) = (l1.max(l2), l1.min(l2));
    if small == 0.0 {
        f64::INFINITY
    } else {
        big / small
    }
}

/// One sweep of coordinate-wise root finding. Each score component is
/// strictly decreasing in its own parameter, so bisection on a bracketing
/// interval always succeeds.
fn bisection_sweep(m: &LogMoments, a: f64, b: f64) -> (f64, f64) {
    let a = solve_decreasing(|x| m.mean_score(x, b)[0], a);
    let b = solve_decreasing(|y| m.mean_score(a, y)[1], b);
    (a, b)
}

fn solve_decreasing(f: impl Fn(f64) -> f64, start: f64) -> f64 {
    let (mut lo, mut hi) = (start, start);
    while f(lo) < 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    while f(hi) > 0.0 && hi < 1e300 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Beta as BetaDist, Distribution};

    fn beta_sample(a: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let dist = BetaDist::new(a, b).unwrap();
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    #[test]
    fn recovers_parameters_and_agrees_with_grid_search() {
        let xs = beta_sample(3.0, 5.0, 10_000, 17);
        let fit = fit_beta_mle(&xs).unwrap();
        assert!(fit.converged);
        assert!((2.85..=3.15).contains(&fit.a), "{fit:?}");
        assert!((4.75..=5.25).contains(&fit.b), "{fit:?}");

        // independent oracle: brute-force likelihood maximization on a grid
        let step = 0.01;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=100 {
            for j in 0..=150 {
                let (a, b) = (2.5 + i as f64 * step, 4.25 + j as f64 * step);
                let ll = beta_log_likelihood(&xs, a, b);
                if ll > best.0 {
                    best = (ll, a, b);
                }
            }
        }
        assert!((best.1 - fit.a).abs() <= step, "grid {best:?} vs {fit:?}");
        assert!((best.2 - fit.b).abs() <= step, "grid {best:?} vs {fit:?}");
        assert!(fit.log_likelihood >= best.0);
    }

    #[test]
    fn first_order_optimality_and_improvement_over_moments() {
        for (a, b, seed) in [(3.0, 5.0, 1), (30.8, 30.8, 2), (0.5, 0.7, 3), (6.09, 54.63, 4)] {
            let xs = beta_sample(a, b, 5000, seed);
            let fit = fit_beta_mle(&xs).unwrap();
            let score = beta_score(&xs, fit.a, fit.b);
            assert!(score[0].abs() < 1e-8 && score[1].abs() < 1e-8, "{score:?}");
            let (a0, b0) = method_of_moments(&xs);
            assert!(fit.log_likelihood >= beta_log_likelihood(&xs, a0, b0));
        }
    }

    #[test]
    fn mirrored_sample_is_symmetric() {
        let mut xs = beta_sample(2.0, 7.0, 2000, 5);
        let mirrored: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
        xs.extend(mirrored);
        let fit = fit_beta_mle(&xs).unwrap();
        assert!((fit.a - fit.b).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_beta_mle(&[0.5; 20]), Err(Error::FitFailed(_))));
        assert!(matches!(fit_beta_mle(&[1.0; 20]), Err(Error::FitFailed(_))));
        assert!(matches!(
            fit_beta_mle(&[0.2, 0.4, 0.6]),
            Err(Error::InsufficientSamples { needed: 10, got: 3 })
        ));
        let mut bad = vec![0.3; 12];
        bad[4] = 1.7;
        assert!(matches!(fit_beta_mle(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_values_are_clamped() {
        let mut xs = beta_sample(0.4, 0.4, 500, 9);
        xs[0] = 0.0;
        xs[1] = 1.0;
        let fit = fit_beta_mle(&xs).unwrap();
        assert!(fit.log_likelihood.is_finite());
        assert!(fit.converged, "{fit:?}");
    }

    #[test]
    fn bisection_fallback_finds_the_same_root() {
        let xs = beta_sample(4.0, 2.0, 3000, 11);
        let fit = fit_beta_mle(&xs).unwrap();
        let m = LogMoments::new(&xs);
        let (mut a, mut b) = (1.0, 1.0);
        for _ in 0..2000 {
            (a, b) = bisection_sweep(&m, a, b);
        }
        assert!((a - fit.a).abs() < 1e-6 * fit.a, "{a} vs {}", fit.a);
        assert!((b - fit.b).abs() < 1e-6 * fit.b, "{b} vs {}", fit.b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn color_swap_equivariance(a in 0.5f64..40.0, b in 0.5f64..40.0, seed in any::<u64>()) {
            let xs = beta_sample(a, b, 400, seed);
            let swapped: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
            let f = fit_beta_mle(&xs).unwrap();
            let g = fit_beta_mle(&swapped).unwrap();
            prop_assert!((f.a - g.b).abs() < 1e-6 * f.a, "{:?} {:?}", f, g);
            prop_assert!((f.b - g.a).abs() < 1e-6 * f.b, "{:?} {:?}", f, g);
        }
    }
}
