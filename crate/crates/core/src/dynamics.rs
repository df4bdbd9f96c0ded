//! Longitudinal quadrotor model.
//!
//! State `x = [p_n, h, u, w, theta, q]`, control `[F, tau_theta]`:
//!
//! ```text
//! p_n' = (u + u_g) cos(theta) + (w + w_g) sin(theta)
//! h'   = (u + u_g) sin(theta) - (w + w_g) cos(theta)
//! u'   = -q w - g sin(theta)
//! w'   =  q u + g cos(theta) - F / m
//! theta' = q
//! q'   = tau_theta / J_y
//! ```
//!
//! Gust velocities only enter the position kinematics (ground velocity is air-relative
//! velocity plus gust). Thrust acts along the body vertical axis so that `F = m g` with
//! level attitude is an exact equilibrium.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix6, SMatrix, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position measurement Jacobian type (2×6).
pub type MeasurementMatrix = SMatrix<f64, 2, 6>;

pub const STATE_DIM: usize = 6;
pub const MEAS_DIM: usize = 2;

/// The six longitudinal states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// Northward position (m).
    pub p_n: f64,
    /// Altitude (m).
    pub h: f64,
    /// Forward body velocity (m/s).
    pub u: f64,
    /// Vertical body velocity (m/s), positive down.
    pub w: f64,
    /// Pitch angle (rad).
    pub theta: f64,
    /// Pitch rate (rad/s).
    pub q: f64,
}

impl StateVector {
    pub fn new(p_n: f64, h: f64, u: f64, w: f64, theta: f64, q: f64) -> Self {
        Self {
            p_n,
            h,
            u,
            w,
            theta,
            q,
        }
    }

    /// Level hover at `altitude`, at rest.
    pub fn hover(altitude: f64) -> Self {
        Self::new(0.0, altitude, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.p_n, self.h, self.u, self.w, self.theta, self.q)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

impl From<Vector6<f64>> for StateVector {
    fn from(v: Vector6<f64>) -> Self {
        Self::from_vector(&v)
    }
}

impl From<StateVector> for Vector6<f64> {
    fn from(x: StateVector) -> Self {
        x.to_vector()
    }
}

/// Thrust and pitch torque.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Total thrust (N), non-negative.
    pub thrust: f64,
    /// Pitch torque (N·m).
    pub pitch_torque: f64,
}

impl ControlInput {
    pub fn new(thrust: f64, pitch_torque: f64) -> Self {
        Self {
            thrust,
            pitch_torque,
        }
    }

    /// `F = m g`, no torque.
    pub fn hover_trim(params: &QuadrotorParams) -> Self {
        Self::new(params.mass * params.gravity, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.thrust.is_finite() || !self.pitch_torque.is_finite() {
            return Err(Error::InputDomain(format!("non-finite control input {self:?}")));
        }
        if self.thrust < 0.0 {
            return Err(Error::InputDomain(format!(
                "thrust must be non-negative, got {}",
                self.thrust
            )));
        }
        Ok(())
    }
}

/// Rigid-body constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrotorParams {
    /// Mass (kg).
    pub mass: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Pitch moment of inertia (kg·m²).
    pub pitch_inertia: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 1.5,
            gravity: 9.81,
            pitch_inertia: 0.057,
        }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("pitch_inertia", self.pitch_inertia),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("quad.{name}"),
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Longitudinal and vertical gust velocities (m/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GustSample {
    pub u_g: f64,
    pub w_g: f64,
}

impl GustSample {
    pub const ZERO: GustSample = GustSample { u_g: 0.0, w_g: 0.0 };

    pub fn new(u_g: f64, w_g: f64) -> Self {
        Self { u_g, w_g }
    }
}

/// Wraps an angle into `(-pi, pi]`. Angles already in range are returned untouched.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

fn check_finite_state(x: &StateVector) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InputDomain(format!("non-finite state {x:?}")))
    }
}

fn check_finite_gust(gust: &GustSample) -> Result<()> {
    if gust.u_g.is_finite() && gust.w_g.is_finite() {
        Ok(())
    } else {
        Err(Error::InputDomain(format!("non-finite gust {gust:?}")))
    }
}

/// Time derivative of the state.
pub fn derivative(
    x: &StateVector,
    control: &ControlInput,
    params: &QuadrotorParams,
    gust: &GustSample,
) -> Result<StateVector> {
    check_finite_state(x)?;
    control.validate()?;
    check_finite_gust(gust)?;
    Ok(rates(&x.to_vector(), control, params, gust).into())
}

/// One classical RK4 step with control and gust held over the step. Pitch is wrapped
/// afterwards.
pub fn step_rk4(
    x: &StateVector,
    control: &ControlInput,
    params: &QuadrotorParams,
    gust: &GustSample,
    dt: f64,
) -> Result<StateVector> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InputDomain(format!("dt must be positive, got {dt}")));
    }
    check_finite_state(x)?;
    control.validate()?;
    check_finite_gust(gust)?;
    Ok(rk4(&x.to_vector(), control, params, gust, dt).into())
}

/// Unchecked vector form of [`derivative`].
#[inline]
pub fn rates(
    x: &Vector6<f64>,
    control: &ControlInput,
    params: &QuadrotorParams,
    gust: &GustSample,
) -> Vector6<f64> {
    let (u, w, theta, q) = (x[2], x[3], x[4], x[5]);
    let (s, c) = theta.sin_cos();
    let u_air = u + gust.u_g;
    let w_air = w + gust.w_g;
    let g = params.gravity;
    Vector6::new(
        u_air * c + w_air * s,
        u_air * s - w_air * c,
        -q * w - g * s,
        q * u + g * c - control.thrust / params.mass,
        q,
        control.pitch_torque / params.pitch_inertia,
    )
}

/// Unchecked vector form of [`step_rk4`].
#[inline]
pub fn rk4(
    x: &Vector6<f64>,
    control: &ControlInput,
    params: &QuadrotorParams,
    gust: &GustSample,
    dt: f64,
) -> Vector6<f64> {
    let half = 0.5 * dt;
    let k1 = rates(x, control, params, gust);
    let k2 = rates(&(x + k1 * half), control, params, gust);
    let k3 = rates(&(x + k2 * half), control, params, gust);
    let k4 = rates(&(x + k3 * dt), control, params, gust);
    let mut next = x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
    next[4] = wrap_angle(next[4]);
    next
}

/// Analytic Jacobian of the dynamics with respect to the state, no gust.
pub fn process_jacobian(x: &StateVector, params: &QuadrotorParams) -> Matrix6<f64> {
    jacobian(&x.to_vector(), params, &GustSample::ZERO)
}

/// Analytic Jacobian with a known gust held constant.
pub fn process_jacobian_with_gust(
    x: &StateVector,
    params: &QuadrotorParams,
    gust: &GustSample,
) -> Matrix6<f64> {
    jacobian(&x.to_vector(), params, gust)
}

/// Vector form of [`process_jacobian_with_gust`].
pub fn jacobian(x: &Vector6<f64>, params: &QuadrotorParams, gust: &GustSample) -> Matrix6<f64> {
    let (u, w, theta, q) = (x[2], x[3], x[4], x[5]);
    let (s, c) = theta.sin_cos();
    let u_air = u + gust.u_g;
    let w_air = w + gust.w_g;
    let g = params.gravity;

    let mut f = Matrix6::zeros();
    f[(0, 2)] = c;
    f[(0, 3)] = s;
    f[(0, 4)] = -u_air * s + w_air * c;
    f[(1, 2)] = s;
    f[(1, 3)] = -c;
    f[(1, 4)] = u_air * c + w_air * s;
    f[(2, 3)] = -q;
    f[(2, 4)] = -g * c;
    f[(2, 5)] = -w;
    f[(3, 2)] = q;
    f[(3, 4)] = -g * s;
    f[(3, 5)] = u;
    f[(4, 5)] = 1.0;
    f
}

/// Position measurement `(p_n, h)`.
pub fn measurement(x: &StateVector) -> Vector2<f64> {
    Vector2::new(x.p_n, x.h)
}

/// Constant selector `H = [e1ᵀ; e2ᵀ]`.
pub fn measurement_jacobian(_x: &StateVector) -> MeasurementMatrix {
    selector()
}

pub(crate) fn selector() -> MeasurementMatrix {
    let mut h = MeasurementMatrix::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const HOVER_THRUST: f64 = 14.715;

    fn params() -> QuadrotorParams {
        QuadrotorParams::default()
    }

    fn deriv(x: StateVector, thrust: f64, gust: GustSample) -> Vector6<f64> {
        derivative(&x, &ControlInput::new(thrust, 0.0), &params(), &gust)
            .unwrap()
            .to_vector()
    }

    #[test]
    fn hover_trim_is_equilibrium() {
        let d = deriv(StateVector::hover(10.0), HOVER_THRUST, GustSample::ZERO);
        assert_abs_diff_eq!(d, Vector6::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn forward_motion_at_trim() {
        let d = deriv(StateVector::new(0., 10., 2., 0., 0., 0.), HOVER_THRUST, GustSample::ZERO);
        assert_abs_diff_eq!(d, Vector6::new(2., 0., 0., 0., 0., 0.), epsilon = 1e-12);
    }

    #[test]
    fn gust_adds_to_ground_velocity() {
        let d = deriv(StateVector::hover(10.0), HOVER_THRUST, GustSample::new(5.0, 0.0));
        assert_abs_diff_eq!(d, Vector6::new(5., 0., 0., 0., 0., 0.), epsilon = 1e-12);
    }

    #[test]
    fn pitched_ninety_degrees() {
        let x = StateVector::new(0., 10., 1., 0., PI / 2.0, 0.);
        let d = deriv(x, 0.0, GustSample::ZERO);
        assert_abs_diff_eq!(d, Vector6::new(0., 1., -9.81, 0., 0., 0.), epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_bad_inputs() {
        let p = params();
        let bad = StateVector::new(f64::NAN, 0., 0., 0., 0., 0.);
        let c = ControlInput::new(1.0, 0.0);
        assert!(matches!(
            derivative(&bad, &c, &p, &GustSample::ZERO),
            Err(Error::InputDomain(_))
        ));
        let x = StateVector::hover(10.0);
        assert!(derivative(&x, &ControlInput::new(f64::INFINITY, 0.0), &p, &GustSample::ZERO).is_err());
        assert!(derivative(&x, &ControlInput::new(-1.0, 0.0), &p, &GustSample::ZERO).is_err());
        assert!(derivative(&x, &c, &p, &GustSample::new(f64::NAN, 0.0)).is_err());
        assert!(step_rk4(&x, &c, &p, &GustSample::ZERO, 0.0).is_err());
        assert!(step_rk4(&x, &c, &p, &GustSample::ZERO, -0.01).is_err());
        assert!(step_rk4(&x, &c, &p, &GustSample::ZERO, f64::NAN).is_err());
    }

    #[test]
    fn rk4_preserves_trim_for_any_dt() {
        let p = params();
        let c = ControlInput::new(HOVER_THRUST, 0.0);
        let x0 = StateVector::hover(10.0);
        for dt in [1e-3, 0.01, 0.1, 0.5, 1.0] {
            let x1 = step_rk4(&x0, &c, &p, &GustSample::ZERO, dt).unwrap();
            assert_abs_diff_eq!(x1.to_vector(), x0.to_vector(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rk4_pitch_rate_small_step_matches_fine_reference() {
        let p = params();
        let c = ControlInput::new(HOVER_THRUST, 0.0);
        let x0 = StateVector::new(0., 10., 0., 0., 0., 1.);
        let coarse = step_rk4(&x0, &c, &p, &GustSample::ZERO, 0.01).unwrap();
        // reference: 1000 sub-steps of 1e-5
        let mut fine = x0.to_vector();
        for _ in 0..1000 {
            fine = rk4(&fine, &c, &p, &GustSample::ZERO, 1e-5);
        }
        assert_abs_diff_eq!(coarse.theta, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(coarse.to_vector(), fine, epsilon = 1e-10);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(PI + 0.5), -PI + 0.5, epsilon = 1e-12);
        assert_eq!(wrap_angle(0.3), 0.3);
        let w = wrap_angle(-7.0);
        assert!(w > -PI && w <= PI);
    }

    #[test]
    fn jacobian_at_trim() {
        let f = process_jacobian(&StateVector::hover(10.0), &params());
        let mut expected = Matrix6::zeros();
        expected[(0, 2)] = 1.0;
        expected[(1, 3)] = -1.0;
        expected[(2, 4)] = -9.81;
        expected[(4, 5)] = 1.0;
        assert_abs_diff_eq!(f, expected, epsilon = 1e-15);
    }

    #[test]
    fn measurement_projection() {
        let x = StateVector::new(3., 10., 1., 2., 0.1, 0.);
        assert_eq!(measurement(&x), Vector2::new(3.0, 10.0));
        assert_eq!(measurement(&StateVector::default()), Vector2::zeros());
        let h = measurement_jacobian(&x);
        assert_eq!(h, measurement_jacobian(&StateVector::default()));
        for r in 0..2 {
            assert_eq!(h.row(r).sum(), 1.0);
            assert_eq!(h[(r, r)], 1.0);
        }
    }

    #[test]
    fn params_validation() {
        assert!(QuadrotorParams::default().validate().is_ok());
        let bad = QuadrotorParams {
            mass: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { field, .. }) if field == "quad.mass"));
    }
}
