//! Reference valuators: random, leave-one-out, exact and truncated Monte-Carlo Shapley.

mod loo;
mod random;
mod shapley;
mod utility;

pub use loo::loo_values;
pub use random::random_values;
pub use shapley::{
    exact_shapley, tmc_shapley, tmc_shapley_with_diagnostics, ShapleyConfig, TmcOutcome,
    EXACT_MAX_PLAYERS,
};
pub use utility::{
    majority_class, score_model, uninformed_score, FnUtility, ScoreMetric, SeedPolicy,
    TrainingUtility, Utility,
};
