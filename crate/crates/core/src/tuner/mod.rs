//! Genetic-algorithm tuning of filter noise parameters.

pub mod cost;
pub mod ga;
pub mod tune;

pub use cost::{cost_least_squares, cost_smooth, rmse, total_variation, CostSpec, CostVariant, SmoothWeights};
pub use ga::{ga_run, Bounds, GaConfig, GaResult};
pub use tune::{decode, encode, evaluate_cost, gene_bounds, tune_filter, GeneBounds, TuneResult};
