use serde::{Deserialize, Serialize};

use super::run::RunResult;
use crate::filters::FilterKind;
use crate::tuner::{rmse, total_variation};

/// Accuracy, smoothness and cost of one estimate series (or of the raw measurements).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetrics {
    pub rmse_pn: f64,
    pub rmse_h: f64,
    /// RMSE pooled over both position channels.
    pub rmse_position: f64,
    pub tv_pn: f64,
    pub tv_h: f64,
    /// Mean wall time per predict + update (s); zero for the measurement row.
    pub step_seconds: f64,
    pub failed_steps: usize,
}

impl SeriesMetrics {
    /// Metrics of `est` against `truth`, channel by channel.
    pub fn from_series(truth_pn: &[f64], truth_h: &[f64], est_pn: &[f64], est_h: &[f64]) -> Self {
        let rmse_pn = rmse(truth_pn, est_pn);
        let rmse_h = rmse(truth_h, est_h);
        Self {
            rmse_pn,
            rmse_h,
            rmse_position: (0.5 * (rmse_pn * rmse_pn + rmse_h * rmse_h)).sqrt(),
            tv_pn: total_variation(est_pn),
            tv_h: total_variation(est_h),
            step_seconds: 0.0,
            failed_steps: 0,
        }
    }

    /// Total variation summed over both channels.
    pub fn tv(&self) -> f64 {
        self.tv_pn + self.tv_h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Raw measurements scored as if they were an estimate.
    pub measurement: SeriesMetrics,
    pub filters: Vec<(FilterKind, SeriesMetrics)>,
}

impl Metrics {
    pub fn filter(&self, kind: FilterKind) -> Option<&SeriesMetrics> {
        self.filters.iter().find(|(k, _)| *k == kind).map(|(_, m)| m)
    }
}

pub fn compute_metrics(result: &RunResult) -> Metrics {
    let truth = &result.truth;
    let t_pn: Vec<f64> = truth.states.iter().map(|s| s.p_n).collect();
    let t_h: Vec<f64> = truth.states.iter().map(|s| s.h).collect();
    let z_pn: Vec<f64> = truth.measurements.iter().map(|z| z[0]).collect();
    let z_h: Vec<f64> = truth.measurements.iter().map(|z| z[1]).collect();
    let measurement = SeriesMetrics::from_series(&t_pn, &t_h, &z_pn, &z_h);
    let filters = result
        .tracks
        .iter()
        .map(|track| {
            let e_pn: Vec<f64> = track.estimates.iter().map(|e| e.mean[0]).collect();
            let e_h: Vec<f64> = track.estimates.iter().map(|e| e.mean[1]).collect();
            let mut m = SeriesMetrics::from_series(&t_pn, &t_h, &e_pn, &e_h);
            m.step_seconds = track.mean_step_seconds();
            m.failed_steps = track.failed_steps.len();
            (track.kind, m)
        })
        .collect();
    Metrics { measurement, filters }
}
