//! Run artifacts: CSV series, metrics, a JSON echo of the configuration and a plot script.
//!
//! Numbers are written as `{:.16e}`, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{Metrics, SeriesMetrics};
use super::run::RunResult;
use crate::error::{Error, Result};
use crate::filters::FilterKind;
use crate::rng;
use crate::turbulence::TurbulenceParams;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const GUSTS_FILE: &str = "gusts.csv";
pub const RUN_FILE: &str = "run.json";
pub const PLOT_FILE: &str = "plot.py";

const STATE_NAMES: [&str; 6] = ["pn", "h", "u", "w", "theta", "q"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names of `trajectory.csv` for the given filters.
pub fn trajectory_header(kinds: &[FilterKind]) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend(STATE_NAMES.iter().map(|s| format!("truth_{s}")));
    cols.push("meas_pn".into());
    cols.push("meas_h".into());
    for kind in kinds {
        cols.extend(STATE_NAMES.iter().map(|s| format!("{kind}_est_{s}")));
        cols.push(format!("{kind}_var_pn"));
        cols.push(format!("{kind}_var_h"));
    }
    cols
}

pub const METRICS_HEADER: [&str; 8] = [
    "source",
    "rmse_pn",
    "rmse_h",
    "rmse_position",
    "tv_pn",
    "tv_h",
    "step_seconds",
    "failed_steps",
];

pub fn metrics_row(source: &str, m: &SeriesMetrics) -> Vec<String> {
    vec![
        source.to_string(),
        fmt_f64(m.rmse_pn),
        fmt_f64(m.rmse_h),
        fmt_f64(m.rmse_position),
        fmt_f64(m.tv_pn),
        fmt_f64(m.tv_h),
        fmt_f64(m.step_seconds),
        m.failed_steps.to_string(),
    ]
}

/// Writes a CSV file with one header row, creating parent directories.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.iter().map(|h| h.as_ref()).collect::<Vec<_>>().join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Numeric CSV contents.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Reads a CSV file whose cells are all numeric.
pub fn read_numeric_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InputDomain(format!("{}: empty file", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|e| Error::InputDomain(format!("{}:{}: `{cell}`: {e}", path.display(), i + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != header.len() {
                return Err(Error::InputDomain(format!(
                    "{}:{}: expected {} cells, got {}",
                    path.display(),
                    i + 2,
                    header.len(),
                    row.len()
                )));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CsvTable { header, rows })
}

/// Values derived while running, recorded next to the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub steps: usize,
    pub seed: u64,
    pub filters: Vec<FilterKind>,
    pub turbulence: Option<TurbulenceParams>,
    /// Random stream indices under the master seed.
    pub streams: Vec<(String, u64)>,
}

/// `run.json` contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub resolved: Resolved,
}

pub fn stream_table() -> Vec<(String, u64)> {
    [
        ("turbulence_u", rng::TURBULENCE_U),
        ("turbulence_v", rng::TURBULENCE_V),
        ("turbulence_w", rng::TURBULENCE_W),
        ("measurement", rng::MEASUREMENT),
        ("pf_init", rng::PF_INIT),
        ("pf_resample", rng::PF_RESAMPLE),
        ("ga", rng::GA),
        ("pf_particle_base", rng::PF_PARTICLE_BASE),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn run_record(exp: &ExperimentConfig, result: &RunResult) -> RunRecord {
    let filters: Vec<FilterKind> = result.tracks.iter().map(|t| t.kind).collect();
    let mut config = exp.clone();
    config.filters.enabled = filters.clone();
    RunRecord {
        config,
        resolved: Resolved {
            steps: result.truth.controls.len(),
            seed: exp.scenario.seed,
            filters,
            turbulence: result.truth.turbulence,
            streams: stream_table(),
        },
    }
}

/// Writes every artifact of one run into `out_dir`; returns the paths written.
pub fn write_outputs(exp: &ExperimentConfig, result: &RunResult, metrics: &Metrics, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let truth = &result.truth;
    let kinds: Vec<FilterKind> = result.tracks.iter().map(|t| t.kind).collect();

    let rows = (0..truth.len()).map(|k| {
        let s = truth.states[k].to_vector();
        let mut row = Vec::with_capacity(9 + 8 * kinds.len());
        row.push(fmt_f64(truth.times[k]));
        row.extend(s.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(truth.measurements[k][0]));
        row.push(fmt_f64(truth.measurements[k][1]));
        for track in &result.tracks {
            let e = &track.estimates[k];
            row.extend(e.mean.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(e.var[0]));
            row.push(fmt_f64(e.var[1]));
        }
        row
    });
    let trajectory = out_dir.join(TRAJECTORY_FILE);
    write_csv(&trajectory, &trajectory_header(&kinds), rows)?;

    let gusts = out_dir.join(GUSTS_FILE);
    write_csv(
        &gusts,
        &["t", "u_g", "v_g", "w_g"],
        (0..truth.len()).map(|k| {
            let g = truth.gusts[k];
            vec![fmt_f64(truth.times[k]), fmt_f64(g[0]), fmt_f64(g[1]), fmt_f64(g[2])]
        }),
    )?;

    let metrics_path = out_dir.join(METRICS_FILE);
    let mut metric_rows = vec![metrics_row("measurement", &metrics.measurement)];
    metric_rows.extend(metrics.filters.iter().map(|(k, m)| metrics_row(k.name(), m)));
    write_csv(&metrics_path, &METRICS_HEADER, metric_rows)?;

    let run = out_dir.join(RUN_FILE);
    let json = serde_json::to_string_pretty(&run_record(exp, result))?;
    write_file(&run, format!("{json}\n").as_bytes())?;

    let plot = out_dir.join(PLOT_FILE);
    write_file(&plot, plot_script(&kinds).as_bytes())?;

    Ok(vec![trajectory, gusts, metrics_path, run, plot])
}

fn plot_script(kinds: &[FilterKind]) -> String {
    let names = kinds.iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(", ");
    let mut s = String::new();
    let _ = writeln!(s, "#!/usr/bin/env python3");
    let _ = writeln!(s, "# Plots the series next to this script. Requires matplotlib.");
    s.push_str(
        r#"import csv
import os
import sys

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(here, name), newline="") as f:
        rows = list(csv.reader(f))
    return {c: [float(r[i]) for r in rows[1:]] for i, c in enumerate(rows[0])}


traj = load("trajectory.csv")
gusts = load("gusts.csv")
"#,
    );
    let _ = writeln!(s, "filters = [{names}]");
    s.push_str(
        r#"
fig, axes = plt.subplots(3, 1, sharex=True, figsize=(10, 9))
for ax, ch, label in ((axes[0], "pn", "p_n (m)"), (axes[1], "h", "h (m)")):
    ax.plot(traj["t"], traj["meas_" + ch], ".", ms=1, color="0.6", label="measured")
    ax.plot(traj["t"], traj["truth_" + ch], "k", lw=1.2, label="true")
    for f in filters:
        ax.plot(traj["t"], traj[f + "_est_" + ch], lw=0.9, label=f.upper())
    ax.set_ylabel(label)
    ax.legend(loc="upper right")
axes[2].plot(gusts["t"], gusts["u_g"], lw=0.8, label="u_g")
axes[2].plot(gusts["t"], gusts["w_g"], lw=0.8, label="w_g")
axes[2].set_ylabel("gust (m/s)")
axes[2].set_xlabel("t (s)")
axes[2].legend(loc="upper right")
fig.tight_layout()
if len(sys.argv) > 1:
    fig.savefig(sys.argv[1], dpi=150)
else:
    plt.show()
"#,
    );
    s
}
