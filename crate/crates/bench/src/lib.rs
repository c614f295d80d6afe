//! Fixtures shared by the criterion benchmarks.

use urnsim_core::urn::Color;
use urnsim_core::{Graph, UrnRng, UrnState};

/// 10-regular circulant on 100 agents, the size used in the sweeps.
pub fn kreg_100() -> Graph {
    Graph::circulant_regular(100, 10).expect("valid circulant")
}

/// Mixed-signal state on `g` after `warmup` steps.
pub fn warmed_state(g: &Graph, warmup: u64, seed: u64) -> (UrnState, UrnRng) {
    let mut rng = UrnRng::seed_from_u64(seed);
    let mut state = UrnState::init_signals(g, 0.5, &mut rng).expect("alpha in range");
    for _ in 0..warmup {
        state.step(g, &mut rng);
    }
    (state, rng)
}

/// The worked example's three-urn line at t = 0: white, black, white.
pub fn worked_example() -> (Graph, UrnState) {
    let g = Graph::path(3).expect("valid path");
    let s = UrnState::init_fixed(&g, &[Color::White, Color::Black, Color::White]).expect("three colors");
    (g, s)
}
