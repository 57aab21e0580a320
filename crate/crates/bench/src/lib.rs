//! Shared fixtures for the benchmarks.

use sisctl_core::control::{Horizon, InitialInfection, RunConfig, SamplerConfig, StrategyConfig};
use sisctl_core::epidemic::EpidemicParams;
use sisctl_core::graph::{generate_watts_strogatz, Graph};
use sisctl_core::scoring::ScorerKind;
use sisctl_core::selection::{Scored, WsspInstance};

pub fn small_world(n: usize) -> Graph {
    generate_watts_strogatz(n, 4, 0.05, 11).expect("valid parameters")
}

/// Controlled SW run with `b = 5` over a fixed number of rounds.
pub fn sw_config(strategy: StrategyConfig, alpha: f64, rounds: u64) -> RunConfig {
    RunConfig {
        params: EpidemicParams::new(3.0, 0.0, 125.0, 5).expect("valid parameters"),
        sampler: SamplerConfig::uniform(alpha),
        strategy,
        horizon: Horizon::rounds(rounds),
        initial: InitialInfection::All,
    }
}

pub fn rdra() -> StrategyConfig {
    StrategyConfig::rdra(ScorerKind::Lrie)
}

/// Selection instance with `b` slots, `b / 2` of them held, and `n`
/// candidates scored by a fixed permutation.
pub fn wssp_instance(b: usize, n: usize) -> WsspInstance {
    let score = |i: usize| ((i * 7919) % (n + b)) as f64;
    let pre = (0..b / 2).map(|i| Scored::new(i, score(i))).collect();
    let cand = (b / 2..b / 2 + n).map(|i| Scored::new(i, score(i))).collect();
    WsspInstance::new(b, pre, cand).expect("distinct nodes")
}
