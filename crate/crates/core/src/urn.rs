//! The exact urn process.
//!
//! Counts are integers; the proportion of black balls `Z_i = B_i / S_i` is
//! derived on demand. The total `S_i = 1 + d_i * t` is never stored.
//!
//! A step is synchronous: every agent draws from its time-`t` urn, then all
//! urns are reinforced with one ball per neighbor draw. The random stream
//! is consumed in agent-index order, one bounded draw per agent per step
//! (monochrome urns included), which is part of the reproducibility
//! contract.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::UrnRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    /// The true state.
    White,
    /// The wrong state.
    Black,
}

impl Color {
    /// Parses a comma-separated list such as `W,B,W`.
    pub fn parse_list(s: &str) -> Result<Vec<Color>> {
        s.split(',').map(|c| c.trim().parse()).collect()
    }
}

impl FromStr for Color {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "W" | "w" | "white" => Ok(Color::White),
            "B" | "b" | "black" => Ok(Color::Black),
            _ => Err(Error::Parse(format!("`{s}` is not a color (expected W or B)"))),
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::White => "W",
            Color::Black => "B",
        })
    }
}

/// Realized draws of one step; `true` is a black draw.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DrawVector(pub Vec<bool>);

impl DrawVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_black(&self, i: usize) -> bool {
        self.0[i]
    }

    /// Number of black draws among the neighbors of `i`.
    #[inline]
    pub fn black_neighbors(&self, g: &Graph, i: usize) -> u64 {
        g.neighbors(i)
            .iter()
            .map(|&j| u64::from(self.0[j as usize]))
            .sum()
    }
}

impl fmt::Display for DrawVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "B" } else { "W" })?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UrnState {
    t: u64,
    black: Vec<u64>,
    white: Vec<u64>,
}

impl UrnState {
    /// Each agent independently receives a white (correct) signal with
    /// probability `alpha`, otherwise a black one.
    pub fn init_signals(g: &Graph, alpha: f64, rng: &mut UrnRng) -> Result<Self> {
        check_alpha(alpha)?;
        let colors: Vec<Color> = (0..g.n())
            .map(|_| {
                if rng.bernoulli(alpha) {
                    Color::White
                } else {
                    Color::Black
                }
            })
            .collect();
        Self::init_fixed(g, &colors)
    }

    pub fn init_fixed(g: &Graph, colors: &[Color]) -> Result<Self> {
        if colors.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: colors.len(),
            });
        }
        let black = colors.iter().map(|&c| u64::from(c == Color::Black)).collect();
        let white = colors.iter().map(|&c| u64::from(c == Color::White)).collect();
        Ok(Self { t: 0, black, white })
    }

    /// Builds a state from raw counts, checking `B_i + W_i = 1 + d_i t`.
    pub fn from_counts(g: &Graph, t: u64, black: Vec<u64>, white: Vec<u64>) -> Result<Self> {
        let state = Self { t, black, white };
        state.check(g)?;
        Ok(state)
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        if self.black.len() != g.n() || self.white.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: self.black.len().min(self.white.len()),
            });
        }
        for i in 0..g.n() {
            let total = self.total(g, i);
            if self.black[i] + self.white[i] != total {
                return Err(Error::InvalidParameter(format!(
                    "agent {i}: {} black + {} white balls, expected {total} at t = {}",
                    self.black[i], self.white[i], self.t
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.black.len()
    }

    pub fn black(&self) -> &[u64] {
        &self.black
    }

    pub fn white(&self) -> &[u64] {
        &self.white
    }

    /// `S_i = 1 + d_i t`.
    #[inline]
    pub fn total(&self, g: &Graph, i: usize) -> u64 {
        1 + g.degree(i) as u64 * self.t
    }

    pub fn white_count(&self) -> usize {
        self.white.iter().filter(|&&w| w > 0).count()
    }

    /// One synchronous draw-and-reinforce step. Returns the realized draws.
    pub fn step(&mut self, g: &Graph, rng: &mut UrnRng) -> DrawVector {
        let mut draws = DrawVector(vec![false; self.n()]);
        self.step_into(g, rng, &mut draws);
        draws
    }

    /// Same as [`UrnState::step`] but reuses the caller's draw buffer.
    #[inline]
    pub fn step_into(&mut self, g: &Graph, rng: &mut UrnRng, draws: &mut DrawVector) {
        draws.0.resize(self.n(), false);
        for i in 0..self.n() {
            let total = self.black[i] + self.white[i];
            draws.0[i] = rng.bernoulli_ratio(self.black[i], total);
        }
        self.apply_draws(g, draws);
    }

    /// Reinforces every urn with its neighbors' draws and advances `t`.
    pub fn apply_draws(&mut self, g: &Graph, draws: &DrawVector) {
        debug_assert_eq!(draws.len(), self.n());
        for i in 0..self.n() {
            let black = draws.black_neighbors(g, i);
            self.black[i] += black;
            self.white[i] += g.degree(i) as u64 - black;
        }
        self.t += 1;
        debug_assert!(self.check(g).is_ok());
    }

    /// `Z_i = B_i / S_i`, the belief in the wrong state.
    pub fn proportions(&self) -> Vec<f64> {
        self.black
            .iter()
            .zip(&self.white)
            .map(|(&b, &w)| b as f64 / (b + w) as f64)
            .collect()
    }

    /// `max_i Z_i - min_i Z_i`.
    pub fn spread(&self) -> f64 {
        let z = self.proportions();
        let (lo, hi) = z
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    }

    pub fn mean_proportion(&self) -> f64 {
        self.proportions().iter().sum::<f64>() / self.n() as f64
    }

    /// `sum_i d_i Z_i / sum_i d_i`.
    pub fn degree_weighted_mean(&self, g: &Graph) -> f64 {
        let weighted: f64 = self
            .proportions()
            .iter()
            .enumerate()
            .map(|(i, z)| g.degree(i) as f64 * z)
            .sum();
        weighted / g.total_degree() as f64
    }

    /// `sum_i B_i / sum_i S_i`. On a regular graph this is a martingale.
    pub fn global_proportion(&self) -> f64 {
        let black: u64 = self.black.iter().sum();
        let total: u64 = self.black.iter().zip(&self.white).map(|(b, w)| b + w).sum();
        black as f64 / total as f64
    }

    pub fn is_monochrome(&self) -> bool {
        self.black.iter().all(|&b| b == 0) || self.white.iter().all(|&w| w == 0)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

pub const TRAJECTORY_HEADER: &str = "t,agent,black,total,z";

/// Appends one row per agent: `t,agent,black,total,z`.
pub fn write_trajectory_rows<W: Write>(out: &mut W, state: &UrnState) -> std::io::Result<()> {
    for i in 0..state.n() {
        let total = state.black[i] + state.white[i];
        writeln!(
            out,
            "{},{},{},{},{}",
            state.t,
            i,
            state.black[i],
            total,
            state.black[i] as f64 / total as f64
        )?;
    }
    Ok(())
}

/// Runs `steps` steps from `state` and writes the trajectory CSV, keeping
/// every `stride`-th step plus the final one.
pub fn write_trajectory<W: Write>(
    out: &mut W,
    g: &Graph,
    state: &mut UrnState,
    steps: u64,
    stride: u64,
    rng: &mut UrnRng,
) -> Result<()> {
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be at least 1".into()));
    }
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    write_trajectory_rows(out, state)?;
    let mut draws = DrawVector(Vec::with_capacity(g.n()));
    for s in 1..=steps {
        state.step_into(g, rng, &mut draws);
        if s % stride == 0 || s == steps {
            write_trajectory_rows(out, state)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use Color::{Black, White};

    fn worked_t1() -> (Graph, UrnState) {
        let g = Graph::path(3).unwrap();
        let mut s = UrnState::init_fixed(&g, &[White, Black, White]).unwrap();
        let mut rng = UrnRng::seed_from_u64(0);
        let draws = s.step(&g, &mut rng);
        assert_eq!(draws.0, vec![false, true, false]);
        (g, s)
    }

    #[test]
    fn signal_extremes() {
        let g = Graph::complete(6).unwrap();
        let mut rng = UrnRng::seed_from_u64(3);
        let s = UrnState::init_signals(&g, 1.0, &mut rng).unwrap();
        assert_eq!(s.white(), &[1; 6]);
        let s = UrnState::init_signals(&g, 0.0, &mut rng).unwrap();
        assert_eq!(s.black(), &[1; 6]);
        assert!(UrnState::init_signals(&g, 1.5, &mut rng).is_err());
        assert!(UrnState::init_signals(&g, -0.1, &mut rng).is_err());
        assert!(UrnState::init_signals(&g, f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn signal_counts_are_binomial() {
        let g = Graph::star(100).unwrap();
        let sd = (100.0f64 * 0.75 * 0.25).sqrt();
        let mut grand = 0.0;
        let mut outside = 0;
        let runs = 10_000;
        for seed in 0..runs {
            let mut rng = UrnRng::seed_from_u64(seed);
            let w = UrnState::init_signals(&g, 0.75, &mut rng).unwrap().white_count() as f64;
            if (w - 75.0).abs() > 3.0 * sd {
                outside += 1;
            }
            grand += w;
        }
        // A 3-sigma band holds per run only with probability ~0.997.
        assert!(outside < runs / 100, "{outside} runs outside the band");
        assert!((grand / runs as f64 - 75.0).abs() < 0.15);
    }

    #[test]
    fn fixed_init() {
        let g = Graph::complete(2).unwrap();
        let s = UrnState::init_fixed(&g, &[Black, White]).unwrap();
        assert_eq!(s.black(), &[1, 0]);
        assert!(UrnState::init_fixed(&g, &[Black]).is_err());
        assert_eq!(Color::parse_list("W,B,W").unwrap(), vec![White, Black, White]);
        assert!(Color::parse_list("W,X").is_err());
    }

    #[test]
    fn worked_example_first_step() {
        let (g, s) = worked_t1();
        assert_eq!(s.t(), 1);
        // urns 1 and 3: one white, one black; urn 2: two white, one black
        assert_eq!(s.white(), &[1, 2, 1]);
        assert_eq!(s.black(), &[1, 1, 1]);
        assert_eq!(s.proportions(), vec![0.5, 1.0 / 3.0, 0.5]);
        assert_relative_eq!(s.spread(), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(s.degree_weighted_mean(&g), 5.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn proportions_after_all_white_second_step() {
        let (g, mut s) = worked_t1();
        s.apply_draws(&g, &DrawVector(vec![false; 3]));
        assert_eq!(s.white(), &[2, 4, 2]);
        assert_eq!(s.black(), &[1, 1, 1]);
        assert_eq!(s.proportions(), vec![1.0 / 3.0, 1.0 / 5.0, 1.0 / 3.0]);
    }

    #[test]
    fn monochrome_is_absorbing() {
        let g = Graph::star(5).unwrap();
        let mut s = UrnState::init_fixed(&g, &[White; 5]).unwrap();
        let mut rng = UrnRng::seed_from_u64(9);
        for t in 1..=50u64 {
            let draws = s.step(&g, &mut rng);
            assert!(draws.0.iter().all(|&b| !b));
            for i in 0..5 {
                assert_eq!(s.black()[i], 0);
                assert_eq!(s.white()[i], 1 + g.degree(i) as u64 * t);
            }
            assert_eq!(s.spread(), 0.0);
        }
        assert_eq!(s.proportions(), vec![0.0; 5]);
    }

    #[test]
    fn diagnostics() {
        let g = Graph::path(3).unwrap();
        let s = UrnState::init_fixed(&g, &[White, Black, White]).unwrap();
        assert_eq!(s.proportions(), vec![0.0, 1.0, 0.0]);
        assert_eq!(s.spread(), 1.0);
        let black = UrnState::init_fixed(&g, &[Black; 3]).unwrap();
        assert_eq!(black.degree_weighted_mean(&g), 1.0);
        assert_eq!(black.spread(), 0.0);

        let k = Graph::circulant_regular(8, 4).unwrap();
        let mut rng = UrnRng::seed_from_u64(5);
        let mut s = UrnState::init_signals(&k, 0.5, &mut rng).unwrap();
        for _ in 0..10 {
            s.step(&k, &mut rng);
        }
        assert_relative_eq!(s.degree_weighted_mean(&k), s.mean_proportion(), epsilon = 1e-14);
    }

    #[test]
    fn trajectory_csv() {
        let g = Graph::path(3).unwrap();
        let mut s = UrnState::init_fixed(&g, &[White, Black, White]).unwrap();
        let mut rng = UrnRng::seed_from_u64(7);
        let mut out = Vec::new();
        write_trajectory(&mut out, &g, &mut s, 1, 1, &mut rng).unwrap();
        let text = String::from_utf8(out).unwrap();
        let expected = "t,agent,black,total,z\n\
                        0,0,0,1,0\n0,1,1,1,1\n0,2,0,1,0\n\
                        1,0,1,2,0.5\n1,1,1,3,0.3333333333333333\n1,2,1,2,0.5\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn trajectory_stride_keeps_final_step() {
        let g = Graph::path(4).unwrap();
        let mut s = UrnState::init_fixed(&g, &[White, Black, White, Black]).unwrap();
        let mut rng = UrnRng::seed_from_u64(1);
        let mut out = Vec::new();
        write_trajectory(&mut out, &g, &mut s, 7, 3, &mut rng).unwrap();
        let text = String::from_utf8(out).unwrap();
        let ts: Vec<&str> = text
            .lines()
            .skip(1)
            .step_by(4)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(ts, ["0", "3", "6", "7"]);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Graph::circulant_regular(20, 4).unwrap();
        let run = |seed| {
            let mut rng = UrnRng::seed_from_u64(seed);
            let mut s = UrnState::init_signals(&g, 0.6, &mut rng).unwrap();
            for _ in 0..200 {
                s.step(&g, &mut rng);
            }
            s
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn regular_graph_martingale() {
        // E[M_T] = M_0 for the global black proportion on a k-regular graph.
        let g = Graph::circulant_regular(12, 4).unwrap();
        let colors: Vec<Color> = (0..12).map(|i| if i < 4 { Black } else { White }).collect();
        let m0 = 4.0 / 12.0;
        let reps = 4000;
        let samples: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = UrnRng::seed_from_u64(1000 + r);
                let mut s = UrnState::init_fixed(&g, &colors).unwrap();
                for _ in 0..100 {
                    s.step(&g, &mut rng);
                }
                s.global_proportion()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / reps as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - m0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    proptest! {
        #[test]
        fn counts_are_conserved(seed in any::<u64>(), n in 2usize..12, steps in 1u64..40) {
            let g = Graph::star(n).unwrap();
            let mut rng = UrnRng::seed_from_u64(seed);
            let mut s = UrnState::init_signals(&g, 0.5, &mut rng).unwrap();
            for _ in 0..steps {
                let before = s.clone();
                let draws = s.step(&g, &mut rng);
                prop_assert!(s.check(&g).is_ok());
                for i in 0..n {
                    prop_assert!(s.black()[i] >= before.black()[i]);
                    prop_assert_eq!(s.black()[i] - before.black()[i], draws.black_neighbors(&g, i));
                }
                for z in s.proportions() {
                    prop_assert!((0.0..=1.0).contains(&z));
                }
            }
            prop_assert_eq!(s.t(), steps);
        }
    }
}
