//! Mean-field limit of the urn process.
//!
//! Writing the proportion recursion as a stochastic approximation with
//! step `gamma_t = 1 / (1 + d (t + 1))`, `d = min_i d_i`, the drift is
//!
//! ```text
//! f_i^t(z) = (1 + d t) / (1 + d_i t) * (sum_{j in N(i)} z_j - d_i z_i)
//! ```
//!
//! which tends to `fbar_i(z) = (d / d_i) * (sum_{j in N(i)} z_j - d_i z_i)`.
//! The prefactor multiplies the whole bracket, so `fbar = -d D^{-1} L z`:
//! every consensus vector `c * 1` is an equilibrium and `sum_i d_i z_i` is
//! conserved along the flow.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Values may leave `[0, 1]` by at most this much before clipping; larger
/// excursions are reported as [`Error::IntegrationDrift`].
pub const CLIP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl OdeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn terminal_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial state")
    }

    /// CSV with header `t,z_0,...,z_{n-1}`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 0..n {
            out.push_str(&format!(",z_{i}"));
        }
        out.push('\n');
        for (t, z) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for v in z {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn check_dim(g: &Graph, z: &[f64]) -> Result<()> {
    if z.len() == g.n() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: g.n(),
            got: z.len(),
        })
    }
}

fn check_unit_cube(z: &[f64]) -> Result<()> {
    match z.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::Domain(format!(
            "z[{i}] = {} is outside [0, 1]",
            z[i]
        ))),
        None => Ok(()),
    }
}

/// `sum_{j in N(i)} z_j - d_i z_i`, i.e. `-(L z)_i`.
#[inline]
fn neighbor_excess(g: &Graph, z: &[f64], i: usize) -> f64 {
    let sum: f64 = g.neighbors(i).iter().map(|&j| z[j as usize]).sum();
    sum - g.degree(i) as f64 * z[i]
}

fn fbar_into(g: &Graph, z: &[f64], out: &mut [f64]) {
    let d = g.min_degree() as f64;
    for (i, o) in out.iter_mut().enumerate() {
        *o = d / g.degree(i) as f64 * neighbor_excess(g, z, i);
    }
}

/// Limit vector field `fbar(z)`.
pub fn fbar(g: &Graph, z: &[f64]) -> Result<Vec<f64>> {
    check_dim(g, z)?;
    let mut out = vec![0.0; g.n()];
    fbar_into(g, z, &mut out);
    Ok(out)
}

/// Time-dependent drift `f^t(z)`.
pub fn ftime(g: &Graph, z: &[f64], t: u64) -> Result<Vec<f64>> {
    check_dim(g, z)?;
    let d = g.min_degree() as f64;
    let t = t as f64;
    Ok((0..g.n())
        .map(|i| {
            let prefactor = (1.0 + d * t) / (1.0 + g.degree(i) as f64 * t);
            prefactor * neighbor_excess(g, z, i)
        })
        .collect())
}

/// Step size `gamma_t = 1 / (1 + d (t + 1))`.
pub fn gamma(t: u64, g: &Graph) -> f64 {
    1.0 / (1.0 + g.min_degree() as f64 * (t as f64 + 1.0))
}

/// `0.01 / max_i d_i`.
pub fn default_step_size(g: &Graph) -> f64 {
    0.01 / g.max_degree() as f64
}

/// Consensus value the flow converges to: `sum_i d_i z0_i / sum_i d_i`.
pub fn predicted_consensus(g: &Graph, z0: &[f64]) -> Result<f64> {
    check_dim(g, z0)?;
    Ok(conserved_quantity(g, z0) / g.total_degree() as f64)
}

/// `sum_i d_i z_i`.
pub fn conserved_quantity(g: &Graph, z: &[f64]) -> f64 {
    z.iter().enumerate().map(|(i, v)| g.degree(i) as f64 * v).sum()
}

/// Classical RK4 for `z' = fbar(z)` from `z0` up to `horizon`, recording
/// every step.
pub fn integrate(g: &Graph, z0: &[f64], step_size: f64, horizon: f64) -> Result<OdeTrajectory> {
    integrate_strided(g, z0, step_size, horizon, 1)
}

/// Like [`integrate`] but records only every `stride`-th step (plus the
/// initial and terminal states).
pub fn integrate_strided(
    g: &Graph,
    z0: &[f64],
    step_size: f64,
    horizon: f64,
    stride: usize,
) -> Result<OdeTrajectory> {
    check_dim(g, z0)?;
    check_unit_cube(z0)?;
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {step_size}"
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be non-negative, got {horizon}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }

    let n = g.n();
    let steps = (horizon / step_size - 1e-9).ceil().max(0.0) as usize;
    let mut traj = OdeTrajectory {
        times: vec![0.0],
        states: vec![z0.to_vec()],
    };
    let mut z = z0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut t = 0.0;

    for step in 1..=steps {
        let t_next = if step == steps {
            horizon
        } else {
            step as f64 * step_size
        };
        let h = t_next - t;

        fbar_into(g, &z, &mut k1);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * h * k1[i];
        }
        fbar_into(g, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = z[i] + 0.5 * h * k2[i];
        }
        fbar_into(g, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = z[i] + h * k3[i];
        }
        fbar_into(g, &tmp, &mut k4);
        for i in 0..n {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = t_next;

        for (agent, v) in z.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::IntegrationDiverged { t });
            }
            if *v < -CLIP_TOLERANCE || *v > 1.0 + CLIP_TOLERANCE {
                return Err(Error::IntegrationDrift { t, agent, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }

        if step % stride == 0 || step == steps {
            traj.times.push(t);
            traj.states.push(z.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spread(z: &[f64]) -> f64 {
        let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    #[test]
    fn consensus_vectors_are_equilibria() {
        for g in [
            Graph::path(5).unwrap(),
            Graph::star(7).unwrap(),
            Graph::circulant_regular(9, 4).unwrap(),
        ] {
            for c in [0.0, 0.3, 1.0] {
                let f = fbar(&g, &vec![c; g.n()]).unwrap();
                assert!(f.iter().all(|v| v.abs() < 1e-15), "{f:?}");
            }
        }
    }

    #[test]
    fn alternative_parenthesization_breaks_consensus() {
        // (d / d_i) * sum_j z_j - d_i z_i, prefactor on the neighbor sum only
        let g = Graph::path(3).unwrap();
        let z = [0.4; 3];
        let d = g.min_degree() as f64;
        let alt: Vec<f64> = (0..3)
            .map(|i| {
                let s: f64 = g.neighbors(i).iter().map(|&j| z[j as usize]).sum();
                d / g.degree(i) as f64 * s - g.degree(i) as f64 * z[i]
            })
            .collect();
        assert!(alt.iter().any(|v| v.abs() > 0.1), "{alt:?}");
        assert!(fbar(&g, &z).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn fbar_by_hand() {
        let g = Graph::path(3).unwrap();
        assert_eq!(fbar(&g, &[1.0, 0.0, 0.0]).unwrap(), vec![-1.0, 0.5, 0.0]);
        assert!(fbar(&g, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn regular_field_is_minus_laplacian() {
        let g = Graph::circulant_regular(8, 4).unwrap();
        let z: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        let f = fbar(&g, &z).unwrap();
        let l = g.laplacian();
        for i in 0..8 {
            let lz: f64 = (0..8).map(|j| l[i][j] as f64 * z[j]).sum();
            assert_abs_diff_eq!(f[i], -lz, epsilon = 1e-14);
        }
        for t in [0, 1, 10, 1000] {
            assert_eq!(ftime(&g, &z, t).unwrap(), f);
        }
    }

    #[test]
    fn ftime_limits() {
        let g = Graph::star(6).unwrap();
        let z = [0.9, 0.1, 0.2, 0.7, 0.5, 0.3];
        let f = fbar(&g, &z).unwrap();
        let far = ftime(&g, &z, 1_000_000_000).unwrap();
        for (a, b) in far.iter().zip(&f) {
            assert!((a - b).abs() < 1e-6);
        }
        let at0 = ftime(&g, &z, 0).unwrap();
        for i in 0..6 {
            let s: f64 = g.neighbors(i).iter().map(|&j| z[j as usize]).sum();
            assert_abs_diff_eq!(at0[i], s - g.degree(i) as f64 * z[i], epsilon = 1e-15);
        }
        // sup-norm gap shrinks monotonically in t
        let gap = |t| {
            ftime(&g, &z, t)
                .unwrap()
                .iter()
                .zip(&f)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let gaps: Vec<f64> = [1, 10, 100, 1000, 10_000].iter().map(|&t| gap(t)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn step_sizes() {
        assert_eq!(gamma(0, &Graph::path(3).unwrap()), 0.5);
        assert_eq!(gamma(4, &Graph::circulant_regular(6, 2).unwrap()), 1.0 / 11.0);
        // harmonic growth: sum_{t<T} gamma_t ~ ln T / d while sum gamma_t^2 stays bounded
        let g = Graph::circulant_regular(10, 4).unwrap();
        let partial = |t_max: u64| (0..t_max).map(|t| gamma(t, &g)).sum::<f64>();
        let squares: f64 = (0..1_000_000u64).map(|t| gamma(t, &g).powi(2)).sum();
        let growth = partial(1_000_000) - partial(1000);
        assert_abs_diff_eq!(growth, (1000.0f64).ln() / 4.0, epsilon = 1e-3);
        assert!(squares < 1.0);
    }

    #[test]
    fn consensus_start_is_constant() {
        let g = Graph::star(5).unwrap();
        let traj = integrate(&g, &[0.3; 5], 0.01, 5.0).unwrap();
        assert_eq!(traj.len(), 501);
        for z in &traj.states {
            for v in z {
                assert_abs_diff_eq!(*v, 0.3, epsilon = 1e-15);
            }
        }
        assert_eq!(traj.terminal_time(), 5.0);
    }

    #[test]
    fn path_converges_to_quarter() {
        let g = Graph::path(3).unwrap();
        let z0 = [1.0, 0.0, 0.0];
        assert_eq!(predicted_consensus(&g, &z0).unwrap(), 0.25);
        let traj = integrate(&g, &z0, default_step_size(&g), 50.0).unwrap();
        for z in &traj.states {
            assert_abs_diff_eq!(conserved_quantity(&g, z), 1.0, epsilon = 1e-12);
        }
        for v in traj.terminal() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-6);
        }
    }

    #[test]
    fn horizon_not_multiple_of_step() {
        let g = Graph::path(3).unwrap();
        let traj = integrate(&g, &[1.0, 0.0, 0.0], 0.3, 1.0).unwrap();
        assert_eq!(traj.times.len(), 5);
        assert_abs_diff_eq!(traj.times[3], 0.9, epsilon = 1e-15);
        assert_eq!(traj.terminal_time(), 1.0);
        let strided = integrate_strided(&g, &[1.0, 0.0, 0.0], 0.3, 1.0, 2).unwrap();
        assert_eq!(strided.times.len(), 3);
        assert_eq!(strided.terminal(), traj.terminal());
    }

    #[test]
    fn input_validation() {
        let g = Graph::path(3).unwrap();
        assert!(integrate(&g, &[1.5, 0.0, 0.0], 0.1, 1.0).is_err());
        assert!(integrate(&g, &[1.0, 0.0, 0.0], 0.0, 1.0).is_err());
        assert!(integrate(&g, &[1.0, 0.0], 0.1, 1.0).is_err());
        assert!(integrate(&g, &[1.0, 0.0, 0.0], 0.1, f64::NAN).is_err());
    }

    #[test]
    fn unstable_step_is_reported() {
        let g = Graph::complete(10).unwrap();
        let err = integrate(&g, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 5.0, 100.0)
            .unwrap_err();
        assert!(matches!(
            err,
            Error::IntegrationDrift { .. } | Error::IntegrationDiverged { .. }
        ));
    }

    #[test]
    fn csv_output() {
        let g = Graph::path(2).unwrap();
        let traj = integrate(&g, &[1.0, 0.0], 0.5, 0.5).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,z_0,z_1"));
        assert_eq!(lines.next(), Some("0,1,0"));
        assert_eq!(lines.count(), 1);
    }

    proptest! {
        #[test]
        fn nonconsensus_points_are_not_equilibria(z in prop::collection::vec(0.0f64..1.0, 6)) {
            prop_assume!(spread(&z) > 1e-6);
            let g = Graph::star(6).unwrap();
            let f = fbar(&g, &z).unwrap();
            prop_assert!(f.iter().any(|v| v.abs() > 0.0));
        }

        #[test]
        fn flow_conserves_and_contracts(z0 in prop::collection::vec(0.0f64..=1.0, 7)) {
            let g = Graph::from_edge_list(7, &[(0, 1), (1, 2), (2, 3), (1, 4), (4, 5), (5, 6), (0, 6)]).unwrap();
            let q0 = conserved_quantity(&g, &z0);
            let traj = integrate_strided(&g, &z0, default_step_size(&g), 20.0, 10).unwrap();
            let mut last = spread(&z0);
            for z in &traj.states {
                prop_assert!((conserved_quantity(&g, z) - q0).abs() <= 1e-8 * g.total_degree() as f64);
                let s = spread(z);
                prop_assert!(s <= last + 1e-12);
                last = s;
            }
        }
    }
}
