use nalgebra::{Matrix6, Vector6};

use super::StepInput;
use crate::dynamics::{self, QuadrotorParams};

/// Discrete-time process model seen by the filters.
pub trait ProcessModel: Send + Sync {
    /// State after `dt` from `x` under `input`.
    fn propagate(&self, x: &Vector6<f64>, input: &StepInput, dt: f64) -> Vector6<f64>;

    /// Continuous-time Jacobian `df/dx` at `x`.
    fn jacobian(&self, x: &Vector6<f64>, input: &StepInput) -> Matrix6<f64>;
}

/// The nonlinear longitudinal model integrated with RK4.
#[derive(Clone, Copy, Debug, Default)]
pub struct Longitudinal {
    pub params: QuadrotorParams,
}

impl Longitudinal {
    pub fn new(params: QuadrotorParams) -> Self {
        Self { params }
    }
}

impl ProcessModel for Longitudinal {
    fn propagate(&self, x: &Vector6<f64>, input: &StepInput, dt: f64) -> Vector6<f64> {
        dynamics::rk4(x, &input.control, &self.params, &input.gust, dt)
    }

    fn jacobian(&self, x: &Vector6<f64>, input: &StepInput) -> Matrix6<f64> {
        dynamics::jacobian(x, &self.params, &input.gust)
    }
}

/// The longitudinal model with pitch and pitch rate frozen at zero.
///
/// What remains is affine with a nilpotent state matrix (`p_n' = u + u_g`,
/// `h' = -(w + w_g)`, `w' = g - F/m`), so RK4 and `I + F dt` are both exact. Used to
/// check the nonlinear filters against the Kalman filter.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearSurrogate {
    pub params: QuadrotorParams,
}

impl LinearSurrogate {
    pub fn new(params: QuadrotorParams) -> Self {
        Self { params }
    }

    fn rates(&self, x: &Vector6<f64>, input: &StepInput) -> Vector6<f64> {
        Vector6::new(
            x[2] + input.gust.u_g,
            -(x[3] + input.gust.w_g),
            0.0,
            self.params.gravity - input.control.thrust / self.params.mass,
            0.0,
            0.0,
        )
    }
}

impl ProcessModel for LinearSurrogate {
    fn propagate(&self, x: &Vector6<f64>, input: &StepInput, dt: f64) -> Vector6<f64> {
        let half = 0.5 * dt;
        let k1 = self.rates(x, input);
        let k2 = self.rates(&(x + k1 * half), input);
        let k3 = self.rates(&(x + k2 * half), input);
        let k4 = self.rates(&(x + k3 * dt), input);
        x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0)
    }

    fn jacobian(&self, _x: &Vector6<f64>, _input: &StepInput) -> Matrix6<f64> {
        let mut f = Matrix6::zeros();
        f[(0, 2)] = 1.0;
        f[(1, 3)] = -1.0;
        f
    }
}
