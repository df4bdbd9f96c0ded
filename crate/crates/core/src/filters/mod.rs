//! EKF, UKF and bootstrap particle filter over the longitudinal model.
//!
//! All three implement [`Estimator`]: `predict` with the step input over `dt`, then
//! `update` with a position measurement `(p_n, h)`.

pub mod ekf;
pub mod model;
pub mod pf;
pub mod ukf;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix6, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, GustSample};
use crate::error::{Error, Result};

pub use ekf::{ekf_predict, ekf_update, Ekf};
pub use model::{Longitudinal, LinearSurrogate, ProcessModel};
pub use pf::{pf_step, systematic_resample, ParticleFilter, ParticleSet, PfStepOutput};
pub use ukf::{ukf_predict, ukf_sigma_points, ukf_update, unscented_transform, SigmaPointSet, Ukf};

/// Symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// What a filter is given for one prediction step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInput {
    pub control: ControlInput,
    /// Gust the process model should apply; zero when the filter models no wind.
    pub gust: GustSample,
}

impl StepInput {
    pub fn new(control: ControlInput, gust: GustSample) -> Self {
        Self { control, gust }
    }
}

/// Diagonal process and measurement noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Process-noise intensities for the six states; the discrete covariance is `diag(q) * dt`.
    pub q_diag: [f64; 6],
    /// Measurement-noise variances for `(p_n, h)`.
    pub r_diag: [f64; 2],
}

impl NoiseConfig {
    pub fn new(q_diag: [f64; 6], r_diag: [f64; 2]) -> Self {
        Self { q_diag, r_diag }
    }

    /// Q = R = I.
    pub fn identity() -> Self {
        Self::new([1.0; 6], [1.0; 2])
    }

    /// EKF values found with the least-squares cost.
    pub fn reference_ekf() -> Self {
        Self::new(
            [4.83e-05, 2.25e-03, 1.25e-03, 1.86e-03, 2.23e-05, 2.19e-05],
            [0.9999, 0.9999],
        )
    }

    /// EKF values found with the four-term smoothing cost.
    pub fn reference_ekf_smooth() -> Self {
        Self::new(
            [9.9924e-05, 3.7216e-05, 7.5426e-05, 2.9733e-04, 9.3899e-05, 1.7283e-05],
            [0.9999, 0.999],
        )
    }

    /// UKF values, used together with [`UkfParams::default`].
    pub fn reference_ukf() -> Self {
        Self::new([1.0e-18, 1.0e-11, 1.0e-19, 1.0e-10, 1.0e-17, 1.0e-12], [0.9999999, 0.9999999])
    }

    /// Hand-picked particle filter values.
    pub fn reference_pf() -> Self {
        Self::new(
            [4.8254e-05, 2.2522e-03, 1.2468e-03, 1.8631e-03, 2.2304e-05, 2.1894e-05],
            [0.9999, 0.999],
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.q_diag.iter().enumerate() {
            if !(q.is_finite() && *q >= 0.0) {
                return Err(Error::config(format!("q_diag[{i}]"), format!("must be >= 0, got {q}")));
            }
        }
        for (i, r) in self.r_diag.iter().enumerate() {
            if !(r.is_finite() && *r > 0.0) {
                return Err(Error::config(format!("r_diag[{i}]"), format!("must be > 0, got {r}")));
            }
        }
        Ok(())
    }

    /// Discrete process covariance `diag(q) * dt`.
    pub fn process_cov(&self, dt: f64) -> Matrix6<f64> {
        Matrix6::from_diagonal(&Vector6::from_column_slice(&self.q_diag)) * dt
    }

    pub fn measurement_cov(&self) -> Matrix2<f64> {
        Matrix2::new(self.r_diag[0], 0.0, 0.0, self.r_diag[1])
    }
}

/// Scaled unscented transform parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UkfParams {
    pub const STATE_DIM: f64 = 6.0;

    /// `lambda = alpha^2 (n + kappa) - n`.
    pub fn lambda(&self) -> f64 {
        self.alpha * self.alpha * (Self::STATE_DIM + self.kappa) - Self::STATE_DIM
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("ukf.alpha", format!("must be in (0, 1], got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::config("ukf.beta", format!("must be >= 0, got {}", self.beta)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::config("ukf.kappa", format!("must be >= 0, got {}", self.kappa)));
        }
        if Self::STATE_DIM + self.lambda() <= 0.0 {
            return Err(Error::config("ukf", "n + lambda must be positive"));
        }
        Ok(())
    }
}

/// Mean and covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector6<f64>,
    pub cov: Matrix6<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Vector6<f64>, cov: Matrix6<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn from_diagonal(mean: Vector6<f64>, var: [f64; 6]) -> Self {
        Self::new(mean, Matrix6::from_diagonal(&Vector6::from_column_slice(&var)))
    }

    /// Symmetric within [`SYMMETRY_TOL`] and no eigenvalue below `-SYMMETRY_TOL`.
    pub fn is_valid(&self) -> bool {
        if !self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite()) {
            return false;
        }
        if (self.cov - self.cov.transpose()).amax() > SYMMETRY_TOL {
            return false;
        }
        self.cov.symmetric_eigenvalues().min() >= -SYMMETRY_TOL
    }
}

/// Re-symmetrises `cov` and rejects non-finite results.
pub(crate) fn finish_cov(cov: Matrix6<f64>) -> Result<Matrix6<f64>> {
    let sym = (cov + cov.transpose()) * 0.5;
    if sym.iter().all(|v| v.is_finite()) {
        Ok(sym)
    } else {
        Err(Error::Numerical("covariance became non-finite".into()))
    }
}

pub(crate) fn check_measurement(z: &Vector2<f64>) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InputDomain(format!("non-finite measurement {z:?}")))
    }
}

/// Point estimate with marginal variances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: Vector6<f64>,
    pub var: Vector6<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Ekf,
    Ukf,
    Pf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Ekf, FilterKind::Ukf, FilterKind::Pf];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf => "ukf",
            FilterKind::Pf => "pf",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ekf" => Ok(FilterKind::Ekf),
            "ukf" => Ok(FilterKind::Ukf),
            "pf" => Ok(FilterKind::Pf),
            other => Err(Error::config("filters", format!("unknown filter `{other}`"))),
        }
    }
}

/// The common step contract.
pub trait Estimator: Send {
    fn kind(&self) -> FilterKind;

    /// Propagates the belief over `dt`.
    fn predict(&mut self, input: &StepInput, dt: f64) -> Result<()>;

    /// Conditions on a position measurement.
    fn update(&mut self, z: &Vector2<f64>) -> Result<()>;

    fn estimate(&self) -> Estimate;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_validation() {
        assert!(NoiseConfig::reference_ekf().validate().is_ok());
        assert!(NoiseConfig::new([0.0; 6], [1.0, 1.0]).validate().is_ok());
        assert!(NoiseConfig::new([-1.0, 0., 0., 0., 0., 0.], [1.0, 1.0]).validate().is_err());
        assert!(NoiseConfig::new([0.0; 6], [0.0, 1.0]).validate().is_err());
        assert!(NoiseConfig::new([f64::NAN; 6], [1.0, 1.0]).validate().is_err());
    }

    #[test]
    fn ukf_params_validation() {
        let p = UkfParams::default();
        assert!(p.validate().is_ok());
        assert!((p.lambda() + 5.04).abs() < 1e-12);
        assert!(UkfParams { alpha: 0.0, ..p }.validate().is_err());
        assert!(UkfParams { alpha: 1.5, ..p }.validate().is_err());
        assert!(UkfParams { beta: -1.0, ..p }.validate().is_err());
        assert!(UkfParams { kappa: -1.0, ..p }.validate().is_err());
    }

    #[test]
    fn filter_kind_parsing() {
        assert_eq!("EKF".parse::<FilterKind>().unwrap(), FilterKind::Ekf);
        assert_eq!(" pf".parse::<FilterKind>().unwrap(), FilterKind::Pf);
        assert!("kf".parse::<FilterKind>().is_err());
    }
}
