//! Exact continuous-time Markov-chain analysis of small chains.
//!
//! Swaps take no time, so every generation arc is expanded into the
//! distribution of its instantaneous swap cascade.

mod generator;
mod limiting;
mod solve;
mod state;

pub use generator::{build_generator, GeneratorMatrix, Transition};
pub use limiting::{
    limiting_distribution_cognitive, limiting_distribution_doubling, limiting_doubling_exact, CognitiveDistribution,
};
pub use solve::{
    delivery_rate, exact_rate, solve_exact, stationary, theorem1_ratio_curve, ExactSolution, RatioPoint,
    StationaryDistribution, NOISE_FLOOR, RESIDUAL_TOLERANCE,
};
pub use state::{enumerate_states, RepeaterState, StateSpace, DEFAULT_STATE_CAP};
