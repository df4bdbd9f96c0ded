use nalgebra::{Matrix6, SMatrix, Vector2};

use super::{check_measurement, finish_cov, Estimate, Estimator, FilterKind, GaussianBelief, NoiseConfig, ProcessModel, StepInput};
use crate::dynamics::selector;
use crate::error::{Error, Result};

/// EKF time update: mean through the model, covariance through `Phi = I + F dt`.
pub fn ekf_predict<M: ProcessModel + ?Sized>(
    belief: &GaussianBelief,
    model: &M,
    input: &StepInput,
    dt: f64,
    noise: &NoiseConfig,
) -> Result<GaussianBelief> {
    let jac = model.jacobian(&belief.mean, input);
    let phi = Matrix6::identity() + jac * dt;
    let mean = model.propagate(&belief.mean, input, dt);
    let cov = phi * belief.cov * phi.transpose() + noise.process_cov(dt);
    Ok(GaussianBelief::new(mean, finish_cov(cov)?))
}

/// EKF measurement update with the Joseph-form covariance.
pub fn ekf_update(belief: &GaussianBelief, z: &Vector2<f64>, noise: &NoiseConfig) -> Result<GaussianBelief> {
    check_measurement(z)?;
    let h = selector();
    let r = noise.measurement_cov();
    let innovation = z - h * belief.mean;
    let s = h * belief.cov * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularUpdate(format!("innovation covariance {s:?} is not invertible")))?;
    let gain: SMatrix<f64, 6, 2> = belief.cov * h.transpose() * s_inv;
    let mean = belief.mean + gain * innovation;
    let i_kh = Matrix6::identity() - gain * h;
    let cov = i_kh * belief.cov * i_kh.transpose() + gain * r * gain.transpose();
    Ok(GaussianBelief::new(mean, finish_cov(cov)?))
}

/// Extended Kalman filter.
#[derive(Clone, Debug)]
pub struct Ekf<M> {
    model: M,
    belief: GaussianBelief,
    noise: NoiseConfig,
}

impl<M: ProcessModel> Ekf<M> {
    pub fn new(model: M, initial: GaussianBelief, noise: NoiseConfig) -> Self {
        Self {
            model,
            belief: initial,
            noise,
        }
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }
}

impl<M: ProcessModel> Estimator for Ekf<M> {
    fn kind(&self) -> FilterKind {
        FilterKind::Ekf
    }

    fn predict(&mut self, input: &StepInput, dt: f64) -> Result<()> {
        self.belief = ekf_predict(&self.belief, &self.model, input, dt, &self.noise)?;
        Ok(())
    }

    fn update(&mut self, z: &Vector2<f64>) -> Result<()> {
        self.belief = ekf_update(&self.belief, z, &self.noise)?;
        Ok(())
    }

    fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.belief.mean,
            var: self.belief.cov.diagonal(),
        }
    }
}
