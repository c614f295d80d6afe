//! Seeded replica sweeps.
//!
//! Every replica owns an independent generator seeded with
//! [`derive_seed`]`(master_seed, replica)`, so a sweep's output depends only
//! on its configuration, never on scheduling or thread count. Results are
//! returned in replica order.
//!
//! The urn state tracks black (wrong-state) proportions. The reported
//! `limit_estimate` is the complementary white proportion
//! `1 - sum_i d_i Z_i / sum_i d_i`, i.e. the consensus belief in the true
//! state, whose mean is compared against `alpha`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec};
use crate::ode::gamma;
use crate::rng::UrnRng;
use crate::urn::{Color, DrawVector, UrnState};

/// SplitMix64 output function (Steele, Lea and Flood), a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replica seed: `splitmix64(master ^ splitmix64(replica))`.
///
/// For a fixed master this is injective in the replica index, and for a
/// fixed replica it is injective in the master.
pub fn derive_seed(master: u64, replica: u64) -> u64 {
    splitmix64(master ^ splitmix64(replica))
}

const LEVEL_SALT: u64 = 0x6C65_7665_6C5F_7365; // "level_se"

/// Master seed of the `level`-th alpha value of a multi-level sweep.
pub fn level_seed(master: u64, level: usize) -> u64 {
    derive_seed(master ^ LEVEL_SALT, level as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub horizon: u64,
    pub replicas: u64,
    pub master_seed: u64,
    pub record_stride: u64,
    /// Stop a replica as soon as its spread drops below this value.
    pub stop_spread: Option<f64>,
    /// Fixed initial colors; when `None` signals are drawn with `alpha`.
    pub init: Option<Vec<Color>>,
}

impl RunConfig {
    pub fn new(alpha: f64, horizon: u64, replicas: u64, master_seed: u64) -> Self {
        Self {
            alpha,
            horizon,
            replicas,
            master_seed,
            record_stride: horizon.max(1),
            stop_spread: None,
            init: None,
        }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.replicas < 1 {
            return Err(Error::InvalidParameter("replicas must be at least 1".into()));
        }
        if self.record_stride < 1 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        if let Some(s) = self.stop_spread {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidParameter(format!(
                    "stop_spread must lie in [0, 1], got {s}"
                )));
            }
        }
        if let Some(init) = &self.init {
            if init.len() != g.n() {
                return Err(Error::DimensionMismatch {
                    expected: g.n(),
                    got: init.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: u64,
    pub spread: f64,
    pub mean_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaResult {
    pub replica: u64,
    pub seed: u64,
    /// Steps actually simulated (less than the horizon after an early stop).
    pub steps: u64,
    pub stopped_early: bool,
    pub init_white_count: usize,
    /// Terminal mean of `Z_i` over agents.
    pub mean_z: f64,
    /// Terminal `sum_i d_i Z_i / sum_i d_i`.
    pub weighted_z: f64,
    /// Terminal `sum_i B_i / sum_i S_i`.
    pub global_z: f64,
    pub spread: f64,
    /// `1 - weighted_z`.
    pub limit_estimate: f64,
    /// Spread and mean every `record_stride` steps, plus the terminal step.
    pub samples: Vec<TrajectorySample>,
}

impl ReplicaResult {
    pub fn sample_at(&self, t: u64) -> Option<&TrajectorySample> {
        self.samples.iter().find(|s| s.t == t)
    }
}

fn sample_of(state: &UrnState) -> TrajectorySample {
    TrajectorySample {
        t: state.t(),
        spread: state.spread(),
        mean_z: state.mean_proportion(),
    }
}

/// Simulates one replica to the horizon (or an early stop).
pub fn run_replica(cfg: &RunConfig, g: &Graph, replica: u64) -> Result<ReplicaResult> {
    cfg.validate(g)?;
    let seed = derive_seed(cfg.master_seed, replica);
    let mut rng = UrnRng::seed_from_u64(seed);
    let mut state = match &cfg.init {
        Some(colors) => UrnState::init_fixed(g, colors)?,
        None => UrnState::init_signals(g, cfg.alpha, &mut rng)?,
    };
    let init_white_count = state.white_count();
    let mut samples = vec![sample_of(&state)];
    let mut draws = DrawVector(Vec::with_capacity(g.n()));
    let mut stopped_early = false;

    for step in 1..=cfg.horizon {
        state.step_into(g, &mut rng, &mut draws);
        let recorded = step % cfg.record_stride == 0;
        if recorded {
            samples.push(sample_of(&state));
        }
        if let Some(threshold) = cfg.stop_spread {
            if state.spread() < threshold {
                stopped_early = step < cfg.horizon;
                if !recorded {
                    samples.push(sample_of(&state));
                }
                break;
            }
        }
    }
    if samples.last().map(|s| s.t) != Some(state.t()) {
        samples.push(sample_of(&state));
    }

    let weighted_z = state.degree_weighted_mean(g);
    Ok(ReplicaResult {
        replica,
        seed,
        steps: state.t(),
        stopped_early,
        init_white_count,
        mean_z: state.mean_proportion(),
        weighted_z,
        global_z: state.global_proportion(),
        spread: state.spread(),
        limit_estimate: 1.0 - weighted_z,
        samples,
    })
}

/// Runs all replicas on the current rayon pool.
pub fn run_sweep(cfg: &RunConfig, g: &Graph) -> Result<Vec<ReplicaResult>> {
    cfg.validate(g)?;
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, g, r))
        .collect()
}

/// Runs all replicas on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(cfg: &RunConfig, g: &Graph, threads: usize) -> Result<Vec<ReplicaResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg, g))
}

/// Sweep configuration file (JSON):
///
/// ```json
/// {
///   "graph": "kreg:100:10",
///   "alphas": [0.1, 0.2, 0.3],
///   "replicas": 2000,
///   "horizon": 2000,
///   "master_seed": 42,
///   "record_stride": 100,
///   "stop_spread": null,
///   "init": null
/// }
/// ```
///
/// `record_stride` defaults to `horizon`; `stop_spread` and `init` (a
/// color list like `"W,B,W"`) are optional. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub graph: GraphSpec,
    pub alphas: Vec<f64>,
    pub replicas: u64,
    pub horizon: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub record_stride: Option<u64>,
    #[serde(default)]
    pub stop_spread: Option<f64>,
    #[serde(default)]
    pub init: Option<String>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.alphas.is_empty() {
            return Err(Error::Config("`alphas` must list at least one value".into()));
        }
        Ok(cfg)
    }

    /// Run configuration of the `level`-th alpha value.
    pub fn level(&self, level: usize) -> Result<RunConfig> {
        let alpha = *self
            .alphas
            .get(level)
            .ok_or_else(|| Error::Config(format!("no alpha level {level}")))?;
        let init = self.init.as_deref().map(Color::parse_list).transpose()?;
        Ok(RunConfig {
            alpha,
            horizon: self.horizon,
            replicas: self.replicas,
            master_seed: level_seed(self.master_seed, level),
            record_stride: self.record_stride.unwrap_or(self.horizon.max(1)),
            stop_spread: self.stop_spread,
            init,
        })
    }

    /// Validates every level against `g` without running anything.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        for level in 0..self.alphas.len() {
            self.level(level)?
                .validate(g)
                .map_err(|e| Error::Config(format!("alphas[{level}]: {e}")))?;
        }
        Ok(())
    }
}

pub const SAMPLES_HEADER: &str = "replica,alpha,limit_estimate,spread_T,init_white_count";

/// Writes the samples CSV of one alpha level.
pub fn write_samples_csv<W: Write>(out: &mut W, alpha: f64, results: &[ReplicaResult]) -> std::io::Result<()> {
    writeln!(out, "{SAMPLES_HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.replica, alpha, r.limit_estimate, r.spread, r.init_white_count
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub alpha: Option<f64>,
    pub limit_estimate: f64,
}

/// Reads a CSV with a header row, extracting `limit_estimate` and, when
/// present, `alpha`.
pub fn read_samples_csv(text: &str) -> Result<Vec<SampleRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("samples file is empty".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let est = col("limit_estimate")
        .ok_or_else(|| Error::Parse("samples file has no `limit_estimate` column".into()))?;
    let alpha = col("alpha");
    let field = |fields: &[&str], idx: usize, no: usize| -> Result<f64> {
        fields
            .get(idx)
            .ok_or_else(|| Error::Parse(format!("row {no}: missing column {idx}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("row {no}: {e}")))
    };
    lines
        .enumerate()
        .map(|(no, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            Ok(SampleRow {
                alpha: alpha.map(|a| field(&fields, a, no + 2)).transpose()?,
                limit_estimate: field(&fields, est, no + 2)?,
            })
        })
        .collect()
}

/// Per-agent statistics of the stochastic-approximation noise
/// `u_i^t = (1 + d t) / (1 + d_i t) * (sum_{j in N(i)} X_j^{t+1} - sum_{j in N(i)} Z_j^t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseStats {
    pub steps: u64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Largest `|u_i^t| / ((1 + d t) / (1 + d_i t) * d_i)` seen.
    pub max_bound_ratio: f64,
    pub bound_violations: u64,
    /// Mean of `(gamma_t u_i^t)^2` over agents and over steps
    /// `t in [2^k - 1, 2^(k+1) - 1)`, indexed by `k`.
    pub scaled_energy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NoiseTracker {
    steps: u64,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    max_bound_ratio: f64,
    bound_violations: u64,
    energy: Vec<(f64, u64)>,
}

impl NoiseTracker {
    pub fn new(n: usize) -> Self {
        Self {
            steps: 0,
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            max_bound_ratio: 0.0,
            bound_violations: 0,
            energy: Vec::new(),
        }
    }

    /// Records the noise of the transition from `before` (time `t`) driven
    /// by `draws` (time `t + 1`).
    pub fn observe(&mut self, g: &Graph, before: &UrnState, draws: &DrawVector) {
        let u = noise_terms(g, before, draws);
        let t = before.t();
        let step = gamma(t, g);
        let block = (64 - (t + 1).leading_zeros() - 1) as usize;
        if self.energy.len() <= block {
            self.energy.resize(block + 1, (0.0, 0));
        }
        let d = g.min_degree() as f64;
        for (i, &ui) in u.iter().enumerate() {
            self.sum[i] += ui;
            self.sum_sq[i] += ui * ui;
            let di = g.degree(i) as f64;
            let bound = (1.0 + d * t as f64) / (1.0 + di * t as f64) * di;
            let ratio = ui.abs() / bound;
            self.max_bound_ratio = self.max_bound_ratio.max(ratio);
            if ratio > 1.0 + 1e-12 {
                self.bound_violations += 1;
            }
            self.energy[block].0 += (step * ui).powi(2);
            self.energy[block].1 += 1;
        }
        self.steps += 1;
    }

    pub fn finish(&self) -> NoiseStats {
        let n = self.steps.max(1) as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let variance = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| if self.steps > 1 { (sq - n * m * m) / (n - 1.0) } else { 0.0 })
            .collect();
        NoiseStats {
            steps: self.steps,
            mean,
            variance,
            max_bound_ratio: self.max_bound_ratio,
            bound_violations: self.bound_violations,
            scaled_energy: self
                .energy
                .iter()
                .map(|&(e, c)| if c > 0 { e / c as f64 } else { 0.0 })
                .collect(),
        }
    }
}

/// `u_i^t` for every agent.
pub fn noise_terms(g: &Graph, before: &UrnState, draws: &DrawVector) -> Vec<f64> {
    let z = before.proportions();
    let d = g.min_degree() as f64;
    let t = before.t() as f64;
    (0..g.n())
        .map(|i| {
            let expected: f64 = g.neighbors(i).iter().map(|&j| z[j as usize]).sum();
            let realized = draws.black_neighbors(g, i) as f64;
            (1.0 + d * t) / (1.0 + g.degree(i) as f64 * t) * (realized - expected)
        })
        .collect()
}

/// Runs `steps` steps from `state`, tracking the noise sequence.
pub fn noise_diagnostics(g: &Graph, state: &mut UrnState, steps: u64, rng: &mut UrnRng) -> NoiseStats {
    let mut tracker = NoiseTracker::new(g.n());
    let mut draws = DrawVector(Vec::with_capacity(g.n()));
    for _ in 0..steps {
        let before = state.clone();
        state.step_into(g, rng, &mut draws);
        tracker.observe(g, &before, &draws);
    }
    tracker.finish()
}
