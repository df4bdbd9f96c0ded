//! Experiment configuration.
//!
//! One JSON document describes a whole experiment: the scenario, the filter settings,
//! the tuning block and the multi-seed comparison. Every field has a default, so `{}`
//! is a valid document (the disturbed scenario). A `run.json` written by
//! [`write_outputs`](super::write_outputs) is also accepted; its `config` member is used.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, QuadrotorParams, StateVector};
use crate::error::{Error, Result};
use crate::filters::{FilterKind, NoiseConfig, UkfParams};
use crate::tuner::{GaConfig, GeneBounds, SmoothWeights};
use crate::turbulence::{params_from_conditions, AxisSelection, TurbulenceParams};

/// Default integration step (s).
pub const DEFAULT_DT: f64 = 0.01;
/// Default scenario length (s).
pub const DEFAULT_DURATION: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMode {
    /// `F = m g`, no torque, every step.
    HoverTrim,
    /// One control input per step; must cover the whole run.
    Explicit { series: Vec<ControlInput> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindConditions {
    /// Altitude (m).
    pub altitude: f64,
    /// Mean wind speed (m/s).
    pub wind_speed: f64,
}

impl Default for WindConditions {
    fn default() -> Self {
        Self {
            altitude: 10.0,
            wind_speed: 70.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbulenceConfig {
    pub enabled: bool,
    /// Which axes are simulated.
    pub axes: AxisSelection,
    /// Used when `params` is absent.
    pub conditions: WindConditions,
    /// Explicit per-axis shaping parameters, overriding `conditions`.
    pub params: Option<TurbulenceParams>,
}

impl Default for TurbulenceConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            axes: AxisSelection::default(),
            conditions: WindConditions::default(),
            params: None,
        }
    }
}

impl TurbulenceConfig {
    pub fn resolved_params(&self) -> Result<TurbulenceParams> {
        match self.params {
            Some(p) => {
                p.validate()?;
                Ok(p)
            }
            None => params_from_conditions(self.conditions.altitude, self.conditions.wind_speed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Length of the run (s).
    pub duration: f64,
    /// Integration and measurement step (s).
    pub dt: f64,
    pub quad: QuadrotorParams,
    pub initial_state: StateVector,
    pub control: ControlMode,
    pub turbulence: TurbulenceConfig,
    /// Measurement noise standard deviation for `(p_n, h)` (m).
    pub measurement_noise_std: [f64; 2],
    /// Master seed for every random stream of the run.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::disturbed()
    }
}

impl ScenarioConfig {
    /// Hover at 10 m in still air.
    pub fn hover() -> Self {
        Self {
            name: "hover".into(),
            duration: DEFAULT_DURATION,
            dt: DEFAULT_DT,
            quad: QuadrotorParams::default(),
            initial_state: StateVector::hover(10.0),
            control: ControlMode::HoverTrim,
            turbulence: TurbulenceConfig {
                enabled: false,
                ..Default::default()
            },
            measurement_noise_std: [0.1, 0.1],
            seed: 1,
        }
    }

    /// Hover at 10 m in 70 m/s turbulence.
    pub fn disturbed() -> Self {
        Self {
            name: "disturbed".into(),
            turbulence: TurbulenceConfig::default(),
            ..Self::hover()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "hover" => Ok(Self::hover()),
            "disturbed" => Ok(Self::disturbed()),
            other => Err(Error::config("scenario", format!("unknown scenario `{other}` (expected hover|disturbed)"))),
        }
    }

    /// Switches the turbulence block to that of a preset, keeping everything else.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let preset = Self::preset(name)?;
        self.name = preset.name;
        self.turbulence.enabled = preset.turbulence.enabled;
        Ok(())
    }

    /// Number of integration steps; series have one more sample.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn control_at(&self, step: usize) -> ControlInput {
        match &self.control {
            ControlMode::HoverTrim => ControlInput::hover_trim(&self.quad),
            ControlMode::Explicit { series } => series[step],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config("scenario.duration", format!("must be positive, got {}", self.duration)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("scenario.dt", format!("must be positive, got {}", self.dt)));
        }
        if self.steps() == 0 {
            return Err(Error::config("scenario.duration", "shorter than one step"));
        }
        self.quad.validate()?;
        if !self.initial_state.is_finite() {
            return Err(Error::config("scenario.initial_state", "must be finite"));
        }
        for (i, s) in self.measurement_noise_std.iter().enumerate() {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(Error::config(
                    format!("scenario.measurement_noise_std[{i}]"),
                    format!("must be >= 0, got {s}"),
                ));
            }
        }
        if let ControlMode::Explicit { series } = &self.control {
            if series.len() < self.steps() {
                return Err(Error::config(
                    "scenario.control.series",
                    format!("has {} entries but the run needs {}", series.len(), self.steps()),
                ));
            }
            for (i, c) in series.iter().enumerate() {
                c.validate()
                    .map_err(|e| Error::config(format!("scenario.control.series[{i}]"), e.to_string()))?;
            }
        }
        if self.turbulence.enabled {
            self.turbulence.resolved_params()?;
        }
        Ok(())
    }
}

/// Whether the filters' process model sees the gust.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindModel {
    /// The realised gust is passed to the filters as a known input.
    Known,
    /// Filters model still air; gusts are unmodelled disturbance.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkfSettings {
    pub q_diag: [f64; 6],
    pub r_diag: [f64; 2],
}

impl Default for EkfSettings {
    fn default() -> Self {
        let n = NoiseConfig::reference_ekf();
        Self {
            q_diag: n.q_diag,
            r_diag: n.r_diag,
        }
    }
}

impl EkfSettings {
    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig::new(self.q_diag, self.r_diag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UkfSettings {
    pub q_diag: [f64; 6],
    pub r_diag: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfSettings {
    fn default() -> Self {
        let n = NoiseConfig::reference_ukf();
        let p = UkfParams::default();
        Self {
            q_diag: n.q_diag,
            r_diag: n.r_diag,
            alpha: p.alpha,
            beta: p.beta,
            kappa: p.kappa,
        }
    }
}

impl UkfSettings {
    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig::new(self.q_diag, self.r_diag)
    }

    pub fn params(&self) -> UkfParams {
        UkfParams {
            alpha: self.alpha,
            beta: self.beta,
            kappa: self.kappa,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfSettings {
    pub q_diag: [f64; 6],
    pub r_diag: [f64; 2],
    pub particles: usize,
}

impl Default for PfSettings {
    fn default() -> Self {
        let n = NoiseConfig::reference_pf();
        Self {
            q_diag: n.q_diag,
            r_diag: n.r_diag,
            particles: 5000,
        }
    }
}

impl PfSettings {
    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig::new(self.q_diag, self.r_diag)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    /// Filters run by `simulate`.
    pub enabled: Vec<FilterKind>,
    pub wind_model: WindModel,
    /// Initial covariance diagonal; the initial mean is the scenario's initial state.
    pub initial_covariance: [f64; 6],
    pub ekf: EkfSettings,
    pub ukf: UkfSettings,
    pub pf: PfSettings,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            enabled: FilterKind::ALL.to_vec(),
            wind_model: WindModel::Known,
            initial_covariance: [0.01, 0.01, 0.01, 0.01, 1e-4, 1e-4],
            ekf: EkfSettings::default(),
            ukf: UkfSettings::default(),
            pf: PfSettings::default(),
        }
    }
}

impl FilterSettings {
    pub fn validate(&self) -> Result<()> {
        let prefix = |kind: &str, e: Error| match e {
            Error::Config { field, message } => Error::config(format!("filters.{kind}.{field}"), message),
            other => other,
        };
        for (i, v) in self.initial_covariance.iter().enumerate() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::config(format!("filters.initial_covariance[{i}]"), format!("must be >= 0, got {v}")));
            }
        }
        self.ekf.noise().validate().map_err(|e| prefix("ekf", e))?;
        self.ukf.noise().validate().map_err(|e| prefix("ukf", e))?;
        self.ukf.params().validate().map_err(|e| match e {
            Error::Config { field, message } => Error::config(format!("filters.{field}"), message),
            other => other,
        })?;
        self.pf.noise().validate().map_err(|e| prefix("pf", e))?;
        if self.pf.particles == 0 {
            return Err(Error::config("filters.pf.particles", "must be at least 1"));
        }
        Ok(())
    }

    /// Noise settings of one filter.
    pub fn noise(&self, kind: FilterKind) -> NoiseConfig {
        match kind {
            FilterKind::Ekf => self.ekf.noise(),
            FilterKind::Ukf => self.ukf.noise(),
            FilterKind::Pf => self.pf.noise(),
        }
    }

    /// Replaces the noise of one filter (and the UKF spread parameters if given).
    pub fn set_params(&mut self, kind: FilterKind, noise: NoiseConfig, ukf: Option<UkfParams>) {
        match kind {
            FilterKind::Ekf => {
                self.ekf.q_diag = noise.q_diag;
                self.ekf.r_diag = noise.r_diag;
            }
            FilterKind::Ukf => {
                self.ukf.q_diag = noise.q_diag;
                self.ukf.r_diag = noise.r_diag;
                if let Some(p) = ukf {
                    self.ukf.alpha = p.alpha;
                    self.ukf.beta = p.beta;
                    self.ukf.kappa = p.kappa;
                }
            }
            FilterKind::Pf => {
                self.pf.q_diag = noise.q_diag;
                self.pf.r_diag = noise.r_diag;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub ga: GaConfig,
    /// Scenario length used for each cost evaluation (s).
    pub horizon: f64,
    pub smooth_weights: SmoothWeights,
    pub bounds: GeneBounds,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            ga: GaConfig::default(),
            horizon: 10.0,
            smooth_weights: SmoothWeights::default(),
            bounds: GeneBounds::default(),
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        self.smooth_weights.validate()?;
        self.bounds.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config("tuning.horizon", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Number of seeds; run `i` uses `scenario.seed + i`.
    pub runs: usize,
    pub filters: Vec<FilterKind>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            runs: 10,
            filters: FilterKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub filters: FilterSettings,
    pub tuning: TuningConfig,
    pub compare: CompareConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.filters.validate()?;
        self.tuning.validate()?;
        if self.compare.runs == 0 {
            return Err(Error::config("compare.runs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") && map.contains_key("resolved") => {
                map.remove("config").unwrap_or_default()
            }
            other => other,
        };
        serde_json::from_value(value).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.scenario.steps(), 10_000);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"scenario": {"durration": 5}}"#).unwrap_err();
        assert!(err.to_string().contains("durration"), "{err}");
    }

    #[test]
    fn field_level_validation_messages() {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.dt = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "scenario.dt"));

        let mut cfg = ExperimentConfig::default();
        cfg.filters.ukf.alpha = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "filters.ukf.alpha"));

        let mut cfg = ExperimentConfig::default();
        cfg.scenario.measurement_noise_std[1] = -0.1;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.scenario.control = ControlMode::Explicit { series: vec![] };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "scenario.control.series"));
    }

    #[test]
    fn presets() {
        let mut s = ScenarioConfig::hover();
        assert!(!s.turbulence.enabled);
        s.apply_preset("disturbed").unwrap();
        assert!(s.turbulence.enabled);
        assert_eq!(s.name, "disturbed");
        assert!(s.apply_preset("storm").is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.control = ControlMode::Explicit {
            series: vec![ControlInput::new(14.715, 0.0); 3],
        };
        cfg.filters.wind_model = WindModel::None;
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
