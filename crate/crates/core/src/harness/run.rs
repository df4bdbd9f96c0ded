//! Truth simulation and filter runs.
//!
//! Timing convention: the gust sampled at `t_k` is held for the step `t_k -> t_{k+1}`,
//! for the truth and for filters that see the wind. Measurement `z_k` is taken at `t_k`;
//! filters start from the prior at `t_0` and, for each step, predict with the control and
//! gust of step `k` and then condition on `z_{k+1}`.

use std::time::{Duration, Instant};

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ExperimentConfig, FilterSettings, ScenarioConfig, WindModel};
use super::metrics::{compute_metrics, Metrics};
use crate::dynamics::{step_rk4, ControlInput, GustSample, StateVector};
use crate::error::{Error, Result};
use crate::filters::{
    Ekf, Estimate, Estimator, FilterKind, GaussianBelief, Longitudinal, ParticleFilter, StepInput, Ukf,
};
use crate::rng;
use crate::turbulence::{Axis, TurbulenceGenerator, TurbulenceParams};

/// One realisation of the true system.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthRun {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Gust on `(u, v, w)` at each sample time.
    pub gusts: Vec<[f64; 3]>,
    /// Control applied over each step; one shorter than the other series.
    pub controls: Vec<ControlInput>,
    pub measurements: Vec<Vector2<f64>>,
    /// Turbulence parameters in effect, if turbulence was enabled.
    pub turbulence: Option<TurbulenceParams>,
}

impl TruthRun {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Longitudinal gust at sample `k`.
    pub fn gust(&self, k: usize) -> GustSample {
        GustSample::new(self.gusts[k][0], self.gusts[k][2])
    }
}

pub fn run_truth(cfg: &ScenarioConfig) -> Result<TruthRun> {
    cfg.validate()?;
    let n = cfg.steps();
    let mut generator = if cfg.turbulence.enabled {
        let params = cfg.turbulence.resolved_params()?;
        Some(TurbulenceGenerator::new(params, cfg.turbulence.axes, cfg.seed, cfg.dt).map_err(|e| match e {
            Error::Config { field, message } => Error::config(format!("scenario.{field}"), message),
            other => other,
        })?)
    } else {
        None
    };

    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut gusts = Vec::with_capacity(n + 1);
    let mut controls = Vec::with_capacity(n);

    let mut x = cfg.initial_state;
    for k in 0..=n {
        times.push(k as f64 * cfg.dt);
        states.push(x);
        let gust = match &generator {
            Some(g) => {
                let s = g.state();
                [s.axis(Axis::U).g, s.axis(Axis::V).g, s.axis(Axis::W).g]
            }
            None => [0.0; 3],
        };
        gusts.push(gust);
        if k == n {
            break;
        }
        let c = cfg.control_at(k);
        controls.push(c);
        x = step_rk4(&x, &c, &cfg.quad, &GustSample::new(gust[0], gust[2]), cfg.dt)?;
        if !x.is_finite() {
            return Err(Error::Numerical(format!("truth state became non-finite at step {}", k + 1)));
        }
        if let Some(g) = generator.as_mut() {
            g.advance();
        }
    }

    let mut meas_rng = rng::stream(cfg.seed, rng::MEASUREMENT);
    let [s_pn, s_h] = cfg.measurement_noise_std;
    let measurements = states
        .iter()
        .map(|s| {
            let a: f64 = meas_rng.sample(StandardNormal);
            let b: f64 = meas_rng.sample(StandardNormal);
            Vector2::new(s.p_n + s_pn * a, s.h + s_h * b)
        })
        .collect();

    Ok(TruthRun {
        times,
        states,
        gusts,
        controls,
        measurements,
        turbulence: generator.map(|g| *g.params()),
    })
}

/// Builds a filter from the settings, starting at `initial` with the configured covariance.
pub fn build_estimator(
    settings: &FilterSettings,
    kind: FilterKind,
    scenario: &ScenarioConfig,
) -> Result<Box<dyn Estimator>> {
    let model = Longitudinal::new(scenario.quad);
    let prior = GaussianBelief::from_diagonal(scenario.initial_state.to_vector(), settings.initial_covariance);
    Ok(match kind {
        FilterKind::Ekf => Box::new(Ekf::new(model, prior, settings.ekf.noise())),
        FilterKind::Ukf => Box::new(Ukf::new(model, prior, settings.ukf.noise(), settings.ukf.params())?),
        FilterKind::Pf => Box::new(ParticleFilter::new(
            model,
            &prior,
            settings.pf.particles,
            settings.pf.noise(),
            scenario.seed,
        )?),
    })
}

/// One filter's pass over a truth run.
#[derive(Clone, Debug)]
pub struct FilterTrack {
    pub kind: FilterKind,
    /// Estimate at each sample time; `estimates[0]` is the prior.
    pub estimates: Vec<Estimate>,
    /// Time spent inside `predict` and `update`.
    pub elapsed: Duration,
    /// Steps on which the filter reported an error.
    pub failed_steps: Vec<usize>,
    /// First error message, if any.
    pub first_error: Option<String>,
}

impl FilterTrack {
    pub fn steps(&self) -> usize {
        self.estimates.len().saturating_sub(1)
    }

    pub fn mean_step_seconds(&self) -> f64 {
        if self.steps() == 0 {
            0.0
        } else {
            self.elapsed.as_secs_f64() / self.steps() as f64
        }
    }

    pub fn diverged(&self) -> bool {
        !self.failed_steps.is_empty() || self.estimates.iter().any(|e| !e.mean.iter().all(|v| v.is_finite()))
    }
}

/// Runs `filter` over `truth`. Filter errors are recorded per step; the run continues.
pub fn run_estimator(
    filter: &mut dyn Estimator,
    truth: &TruthRun,
    dt: f64,
    wind: WindModel,
) -> FilterTrack {
    let n = truth.controls.len();
    let mut estimates = Vec::with_capacity(n + 1);
    estimates.push(filter.estimate());
    let mut elapsed = Duration::ZERO;
    let mut failed_steps = Vec::new();
    let mut first_error = None;
    for k in 0..n {
        let gust = match wind {
            WindModel::Known => truth.gust(k),
            WindModel::None => GustSample::ZERO,
        };
        let input = StepInput::new(truth.controls[k], gust);
        let z = truth.measurements[k + 1];
        let start = Instant::now();
        let res = filter.predict(&input, dt).and_then(|_| filter.update(&z));
        elapsed += start.elapsed();
        if let Err(e) = res {
            failed_steps.push(k + 1);
            first_error.get_or_insert_with(|| e.to_string());
        }
        estimates.push(filter.estimate());
    }
    FilterTrack {
        kind: filter.kind(),
        estimates,
        elapsed,
        failed_steps,
        first_error,
    }
}

pub fn run_filter(
    settings: &FilterSettings,
    kind: FilterKind,
    scenario: &ScenarioConfig,
    truth: &TruthRun,
) -> Result<FilterTrack> {
    let mut filter = build_estimator(settings, kind, scenario)?;
    Ok(run_estimator(filter.as_mut(), truth, scenario.dt, settings.wind_model))
}

/// Truth plus every selected filter's track.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub truth: TruthRun,
    pub tracks: Vec<FilterTrack>,
}

impl RunResult {
    pub fn track(&self, kind: FilterKind) -> Option<&FilterTrack> {
        self.tracks.iter().find(|t| t.kind == kind)
    }
}

/// One truth realisation shared by every filter in `kinds`.
pub fn run_comparison(exp: &ExperimentConfig, kinds: &[FilterKind]) -> Result<(RunResult, Metrics)> {
    if kinds.is_empty() {
        return Err(Error::config("filters.enabled", "select at least one filter"));
    }
    exp.validate()?;
    let truth = run_truth(&exp.scenario)?;
    let tracks = kinds
        .iter()
        .map(|&k| run_filter(&exp.filters, k, &exp.scenario, &truth))
        .collect::<Result<Vec<_>>>()?;
    let result = RunResult { truth, tracks };
    let metrics = compute_metrics(&result);
    Ok((result, metrics))
}
