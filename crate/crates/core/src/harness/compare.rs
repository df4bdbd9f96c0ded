//! Multi-seed comparison: the same experiment repeated for `compare.runs` seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::Metrics;
use super::output::{fmt_f64, write_csv, write_file, RUN_FILE};
use super::run::run_comparison;
use crate::error::Result;
use crate::filters::FilterKind;

pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub filters: Vec<FilterKind>,
    pub runs: Vec<SeedOutcome>,
}

impl Comparison {
    /// Number of runs for which `pred` holds.
    pub fn count(&self, pred: impl Fn(&Metrics) -> bool) -> usize {
        self.runs.iter().filter(|r| pred(&r.metrics)).count()
    }
}

/// Runs the experiment for seeds `scenario.seed .. scenario.seed + compare.runs`.
pub fn compare(exp: &ExperimentConfig) -> Result<Comparison> {
    exp.validate()?;
    let filters = exp.compare.filters.clone();
    let mut runs = Vec::with_capacity(exp.compare.runs);
    for i in 0..exp.compare.runs {
        let mut cfg = exp.clone();
        cfg.scenario.seed = exp.scenario.seed.wrapping_add(i as u64);
        let (_, metrics) = run_comparison(&cfg, &filters)?;
        runs.push(SeedOutcome {
            seed: cfg.scenario.seed,
            metrics,
        });
    }
    Ok(Comparison { filters, runs })
}

pub const COMPARISON_HEADER: [&str; 9] = [
    "seed",
    "source",
    "rmse_pn",
    "rmse_h",
    "rmse_position",
    "tv_pn",
    "tv_h",
    "step_seconds",
    "failed_steps",
];

/// Writes `comparison.csv` (one row per seed and source) and `run.json`.
pub fn write_comparison(exp: &ExperimentConfig, cmp: &Comparison, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = cmp.runs.iter().flat_map(|run| {
        let seed = run.seed.to_string();
        std::iter::once(("measurement".to_string(), run.metrics.measurement))
            .chain(run.metrics.filters.iter().map(|(k, m)| (k.name().to_string(), *m)))
            .map(move |(source, m)| {
                vec![
                    seed.clone(),
                    source,
                    fmt_f64(m.rmse_pn),
                    fmt_f64(m.rmse_h),
                    fmt_f64(m.rmse_position),
                    fmt_f64(m.tv_pn),
                    fmt_f64(m.tv_h),
                    fmt_f64(m.step_seconds),
                    m.failed_steps.to_string(),
                ]
            })
    });
    let table = out_dir.join(COMPARISON_FILE);
    write_csv(&table, &COMPARISON_HEADER, rows)?;

    let record = serde_json::json!({
        "config": exp,
        "resolved": {
            "seeds": cmp.runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
            "filters": cmp.filters,
            "steps": exp.scenario.steps(),
            "turbulence": if exp.scenario.turbulence.enabled {
                Some(exp.scenario.turbulence.resolved_params()?)
            } else {
                None
            },
            "streams": super::output::stream_table(),
        },
    });
    let run = out_dir.join(RUN_FILE);
    write_file(&run, format!("{}\n", serde_json::to_string_pretty(&record)?).as_bytes())?;
    Ok(vec![table, run])
}
