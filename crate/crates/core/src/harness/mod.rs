//! Scenario configuration, truth simulation, filter comparison and run artifacts.

pub mod compare;
pub mod config;
pub mod metrics;
pub mod output;
pub mod run;

pub use compare::{compare, write_comparison, Comparison, SeedOutcome};
pub use config::{
    CompareConfig, ControlMode, EkfSettings, ExperimentConfig, FilterSettings, PfSettings, ScenarioConfig,
    TurbulenceConfig, TuningConfig, UkfSettings, WindConditions, WindModel,
};
pub use metrics::{compute_metrics, Metrics, SeriesMetrics};
pub use output::{read_numeric_csv, trajectory_header, write_outputs, CsvTable, RunRecord};
pub use run::{
    build_estimator, run_comparison, run_estimator, run_filter, run_truth, FilterTrack, RunResult, TruthRun,
};
