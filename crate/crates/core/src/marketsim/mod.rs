//! Closed-loop evaluation of market-making strategies against a simulated
//! Hawkes market, the strategy comparison across believed models, and the
//! branching study of long-memory kernels.

mod compare;
mod convergence;
mod episode;

pub use compare::{
    compare_strategies, BeliefModel, ComparisonConfig, ComparisonReport, DiffSection, ProbeComparison, ProbeState,
};
pub use convergence::{ols_slope, run_convergence, ConvergenceConfig, ConvergenceReport, ConvergenceRow, GuideGrid};
pub use episode::{
    episode_seed, episode_totals, estimate_value, mean_stderr, paired_difference, run_episode, BeliefController,
    Episode, PolicyController, StrategyValueEstimate,
};
