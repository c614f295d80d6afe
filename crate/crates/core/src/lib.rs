//! Reinforcing-urn opinion dynamics on finite connected graphs.
//!
//! Every agent owns an urn of white (true state) and black (wrong state)
//! balls, seeded with one ball matching a private signal. At each step all
//! agents draw one ball with replacement and every agent adds one ball of
//! the drawn color for each of its neighbors' draws. The crate provides:
//!
//! * [`graph`]: fixed connected topologies and their Laplacians,
//! * [`urn`]: the exact integer-count process,
//! * [`exact`]: brute-force rational enumeration of small instances,
//! * [`ode`]: the mean-field ODE limit and its RK4 integration,
//! * [`montecarlo`]: seeded replica sweeps and noise diagnostics,
//! * [`stats`]: beta/normal fitting, KS statistics and the conjecture table.
//!
//! Agents are indexed `0..n`.

pub mod error;
pub mod exact;
pub mod graph;
pub mod montecarlo;
pub mod ode;
pub mod rng;
pub mod stats;
pub mod urn;

pub use error::{Error, Result};
pub use exact::{OutcomeDistribution, Rational};
pub use graph::{Graph, GraphSpec};
pub use montecarlo::{ReplicaResult, RunConfig, SweepConfig};
pub use ode::OdeTrajectory;
pub use rng::UrnRng;
pub use stats::{BetaFit, GofReport, NormalFit};
pub use urn::{Color, DrawVector, UrnState};
