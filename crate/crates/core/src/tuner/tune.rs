//! Filter tuning: genome encoding and the GA objective.
//!
//! Genome layout: `log10 q_1..q_6`, `log10 r_1..r_2`, and for the UKF additionally
//! `alpha, beta, kappa`. Every genome is scored on one fixed truth realisation, so the
//! objective is deterministic.

use serde::{Deserialize, Serialize};

use super::cost::{cost_least_squares, cost_smooth, CostSpec};
use super::ga::{ga_run, Bounds};
use crate::error::{Error, Result};
use crate::filters::{FilterKind, NoiseConfig, UkfParams};
use crate::harness::{run_filter, run_truth, ExperimentConfig, FilterSettings, ScenarioConfig, TruthRun};

/// Search box per gene group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneBounds {
    pub q_log10: [f64; 2],
    pub r_log10: [f64; 2],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub kappa: [f64; 2],
}

impl Default for GeneBounds {
    fn default() -> Self {
        Self {
            q_log10: [-19.0, -1.0],
            r_log10: [-4.0, 1.0],
            alpha: [0.01, 1.0],
            beta: [0.0, 4.0],
            kappa: [0.0, 10.0],
        }
    }
}

impl GeneBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("q_log10", self.q_log10),
            ("r_log10", self.r_log10),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("kappa", self.kappa),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::config(format!("tuning.bounds.{name}"), format!("invalid range [{lo}, {hi}]")));
            }
        }
        if !(self.alpha[0] > 0.0 && self.alpha[1] <= 1.0) {
            return Err(Error::config("tuning.bounds.alpha", "must lie in (0, 1]"));
        }
        if self.beta[0] < 0.0 || self.kappa[0] < 0.0 {
            return Err(Error::config("tuning.bounds", "beta and kappa must be >= 0"));
        }
        Ok(())
    }
}

fn genome_len(kind: FilterKind) -> usize {
    match kind {
        FilterKind::Ukf => 11,
        _ => 8,
    }
}

pub fn gene_bounds(kind: FilterKind, b: &GeneBounds) -> Result<Bounds> {
    let mut lo = vec![b.q_log10[0]; 6];
    let mut hi = vec![b.q_log10[1]; 6];
    lo.extend([b.r_log10[0]; 2]);
    hi.extend([b.r_log10[1]; 2]);
    if kind == FilterKind::Ukf {
        lo.extend([b.alpha[0], b.beta[0], b.kappa[0]]);
        hi.extend([b.alpha[1], b.beta[1], b.kappa[1]]);
    }
    Bounds::new(lo, hi)
}

pub fn decode(kind: FilterKind, genes: &[f64]) -> Result<(NoiseConfig, Option<UkfParams>)> {
    if genes.len() != genome_len(kind) {
        return Err(Error::InputDomain(format!(
            "{kind} genome needs {} genes, got {}",
            genome_len(kind),
            genes.len()
        )));
    }
    let q = std::array::from_fn(|i| 10f64.powf(genes[i]));
    let r = std::array::from_fn(|i| 10f64.powf(genes[6 + i]));
    let ukf = (kind == FilterKind::Ukf).then(|| UkfParams {
        alpha: genes[8],
        beta: genes[9],
        kappa: genes[10],
    });
    Ok((NoiseConfig::new(q, r), ukf))
}

/// Inverse of [`decode`]. Zero intensities map to `-inf` and should be clamped by the caller.
pub fn encode(kind: FilterKind, noise: &NoiseConfig, ukf: Option<&UkfParams>) -> Vec<f64> {
    let mut g: Vec<f64> = noise.q_diag.iter().chain(&noise.r_diag).map(|v| v.log10()).collect();
    if kind == FilterKind::Ukf {
        let p = ukf.copied().unwrap_or_default();
        g.extend([p.alpha, p.beta, p.kappa]);
    }
    g
}

/// Cost of running `kind` with `settings` over `truth`. Failed or non-finite runs score `+inf`.
pub fn evaluate_cost(
    settings: &FilterSettings,
    kind: FilterKind,
    scenario: &ScenarioConfig,
    truth: &TruthRun,
    cost: &CostSpec,
) -> f64 {
    let track = match run_filter(settings, kind, scenario, truth) {
        Ok(t) if !t.diverged() => t,
        _ => return f64::INFINITY,
    };
    let e_pn: Vec<f64> = track.estimates.iter().map(|e| e.mean[0]).collect();
    let e_h: Vec<f64> = track.estimates.iter().map(|e| e.mean[1]).collect();
    let value = match cost {
        CostSpec::LeastSquares => {
            let t_pn: Vec<f64> = truth.states.iter().map(|s| s.p_n).collect();
            let t_h: Vec<f64> = truth.states.iter().map(|s| s.h).collect();
            cost_least_squares(&t_pn, &t_h, &e_pn, &e_h)
        }
        CostSpec::Smooth(w) => {
            let z_pn: Vec<f64> = truth.measurements.iter().map(|z| z[0]).collect();
            let z_h: Vec<f64> = truth.measurements.iter().map(|z| z[1]).collect();
            cost_smooth(&z_pn, &z_h, &e_pn, &e_h, w)
        }
    };
    match value {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub filter: FilterKind,
    pub cost: CostSpec,
    pub noise: NoiseConfig,
    pub ukf: Option<UkfParams>,
    pub genome: Vec<f64>,
    pub best_cost: f64,
    /// Cost of the parameters configured before tuning, on the same realisation.
    pub baseline_cost: f64,
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    pub stalled: bool,
    /// Length of the tuning scenario (s).
    pub horizon: f64,
}

/// Tunes one filter's noise (and, for the UKF, spread) parameters with the GA.
pub fn tune_filter(exp: &ExperimentConfig, kind: FilterKind, cost: CostSpec) -> Result<TuneResult> {
    exp.validate()?;
    let scenario = ScenarioConfig {
        duration: exp.tuning.horizon,
        ..exp.scenario.clone()
    };
    let truth = run_truth(&scenario)?;
    let bounds = gene_bounds(kind, &exp.tuning.bounds)?;
    let baseline_cost = evaluate_cost(&exp.filters, kind, &scenario, &truth, &cost);

    let objective = |genes: &[f64]| -> f64 {
        let Ok((noise, ukf)) = decode(kind, genes) else {
            return f64::INFINITY;
        };
        let mut settings = exp.filters.clone();
        settings.set_params(kind, noise, ukf);
        evaluate_cost(&settings, kind, &scenario, &truth, &cost)
    };
    let ga = ga_run(&exp.tuning.ga, &bounds, objective)?;
    let (noise, ukf) = decode(kind, &ga.best)?;
    Ok(TuneResult {
        filter: kind,
        cost,
        noise,
        ukf,
        genome: ga.best,
        best_cost: ga.best_cost,
        baseline_cost,
        history: ga.history,
        generations: ga.generations,
        evaluations: ga.evaluations,
        stalled: ga.stalled,
        horizon: exp.tuning.horizon,
    })
}
