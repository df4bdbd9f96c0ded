//! Von Karman style gust generator.
//!
//! Each axis is a second-order shaping filter
//!
//! ```text
//! g'' + 2 zeta omega_n g' + omega_n^2 g = k n / sqrt(dt)
//! ```
//!
//! driven by a standard-normal sample `n` held over the step. The input gain is
//! `k = sigma * sqrt(4 zeta omega_n^3)`, which makes the stationary standard deviation
//! of `g` equal to `sigma` for unit-intensity white noise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::GustSample;
use crate::error::{Error, Result};
use crate::rng;

const FEET_PER_METER: f64 = 1.0 / 0.3048;
/// Largest `dt * omega_n` accepted by [`axis_step`].
pub const STABILITY_LIMIT: f64 = 0.5;
/// Damping ratio used by [`params_from_conditions`].
pub const DEFAULT_DAMPING: f64 = 0.7;
/// Wind speed floor (m/s) for the natural-frequency mapping, so calm air keeps `omega_n > 0`.
const MIN_REFERENCE_SPEED: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    U,
    V,
    W,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::U, Axis::V, Axis::W];

    pub fn name(self) -> &'static str {
        match self {
            Axis::U => "u",
            Axis::V => "v",
            Axis::W => "w",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Axis::U => rng::TURBULENCE_U,
            Axis::V => rng::TURBULENCE_V,
            Axis::W => rng::TURBULENCE_W,
        }
    }
}

/// Shaping filter parameters for one axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisParams {
    /// Damping ratio.
    pub zeta: f64,
    /// Natural frequency (rad/s).
    pub omega_n: f64,
    /// Target stationary standard deviation of the gust (m/s).
    pub sigma: f64,
}

impl AxisParams {
    pub fn new(zeta: f64, omega_n: f64, sigma: f64) -> Self {
        Self {
            zeta,
            omega_n,
            sigma,
        }
    }

    /// White-noise input gain giving a stationary std of `sigma`.
    pub fn input_gain(&self) -> f64 {
        self.sigma * (4.0 * self.zeta * self.omega_n.powi(3)).sqrt()
    }

    pub fn validate(&self, axis: Axis) -> Result<()> {
        let field = |name: &str| format!("turbulence.axes.{}.{name}", axis.name());
        if !(self.zeta.is_finite() && self.zeta > 0.0) {
            return Err(Error::config(field("zeta"), format!("must be positive, got {}", self.zeta)));
        }
        if !(self.omega_n.is_finite() && self.omega_n > 0.0) {
            return Err(Error::config(
                field("omega_n"),
                format!("must be positive, got {}", self.omega_n),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::config(
                field("sigma"),
                format!("must be non-negative, got {}", self.sigma),
            ));
        }
        Ok(())
    }

    /// Checks `dt * omega_n` against [`STABILITY_LIMIT`].
    pub fn check_step(&self, axis: Axis, dt: f64) -> Result<()> {
        if dt * self.omega_n >= STABILITY_LIMIT {
            return Err(Error::config(
                format!("turbulence.axes.{}.omega_n", axis.name()),
                format!(
                    "dt * omega_n = {} exceeds the stability limit {STABILITY_LIMIT} (dt = {dt}, omega_n = {})",
                    dt * self.omega_n,
                    self.omega_n
                ),
            ));
        }
        Ok(())
    }
}

/// Parameters for all three axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceParams {
    pub u: AxisParams,
    pub v: AxisParams,
    pub w: AxisParams,
}

impl TurbulenceParams {
    pub fn axis(&self, axis: Axis) -> &AxisParams {
        match axis {
            Axis::U => &self.u,
            Axis::V => &self.v,
            Axis::W => &self.w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Axis::ALL.iter().try_for_each(|&a| self.axis(a).validate(a))
    }

    /// Every axis intensity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |p: AxisParams| AxisParams {
            sigma: p.sigma * factor,
            ..p
        };
        Self {
            u: s(self.u),
            v: s(self.v),
            w: s(self.w),
        }
    }
}

/// Gust velocity and its rate for one axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisState {
    pub g: f64,
    pub g_dot: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceState {
    pub u: AxisState,
    pub v: AxisState,
    pub w: AxisState,
}

impl TurbulenceState {
    pub fn axis(&self, axis: Axis) -> &AxisState {
        match axis {
            Axis::U => &self.u,
            Axis::V => &self.v,
            Axis::W => &self.w,
        }
    }

    fn axis_mut(&mut self, axis: Axis) -> &mut AxisState {
        match axis {
            Axis::U => &mut self.u,
            Axis::V => &mut self.v,
            Axis::W => &mut self.w,
        }
    }
}

/// Which axes are simulated. Disabled axes stay at rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSelection {
    pub u: bool,
    pub v: bool,
    pub w: bool,
}

impl Default for AxisSelection {
    /// Longitudinal only: `u` and `w`.
    fn default() -> Self {
        Self {
            u: true,
            v: false,
            w: true,
        }
    }
}

impl AxisSelection {
    pub fn enabled(&self, axis: Axis) -> bool {
        match axis {
            Axis::U => self.u,
            Axis::V => self.v,
            Axis::W => self.w,
        }
    }
}

/// Advances one axis by one RK4 step with the noise sample held over the step.
pub fn axis_step(state: AxisState, params: &AxisParams, noise: f64, dt: f64) -> Result<AxisState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InputDomain(format!("dt must be positive, got {dt}")));
    }
    if dt * params.omega_n >= STABILITY_LIMIT {
        return Err(Error::config(
            "turbulence.omega_n",
            format!("dt * omega_n = {} exceeds {STABILITY_LIMIT}", dt * params.omega_n),
        ));
    }
    Ok(axis_step_unchecked(state, params, noise, dt))
}

#[inline]
fn axis_step_unchecked(state: AxisState, params: &AxisParams, noise: f64, dt: f64) -> AxisState {
    let forcing = params.input_gain() * noise / dt.sqrt();
    let two_zw = 2.0 * params.zeta * params.omega_n;
    let w2 = params.omega_n * params.omega_n;
    let f = |g: f64, gd: f64| (gd, forcing - two_zw * gd - w2 * g);

    let half = 0.5 * dt;
    let (a1, b1) = f(state.g, state.g_dot);
    let (a2, b2) = f(state.g + half * a1, state.g_dot + half * b1);
    let (a3, b3) = f(state.g + half * a2, state.g_dot + half * b2);
    let (a4, b4) = f(state.g + dt * a3, state.g_dot + dt * b3);
    AxisState {
        g: state.g + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        g_dot: state.g_dot + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    }
}

/// Projects the `u` and `w` gust velocities. Disabled axes contribute zero.
pub fn sample_gust(state: &TurbulenceState, axes: &AxisSelection) -> GustSample {
    GustSample {
        u_g: if axes.u { state.u.g } else { 0.0 },
        w_g: if axes.w { state.w.g } else { 0.0 },
    }
}

/// Low-altitude parameter map from altitude (m) and wind speed (m/s).
///
/// `sigma_u = 0.1 V`, `sigma_w = 0.7 sigma_u`, `sigma_v = sigma_u`. Length scales use
/// altitude in feet: `L_w = h`, `L_u = h / (0.177 + 0.000823 h)^1.2`, `L_v = L_u / 2`.
/// `omega_n = V / L` per axis and `zeta = 0.7`.
pub fn params_from_conditions(altitude: f64, wind_speed: f64) -> Result<TurbulenceParams> {
    if !(altitude.is_finite() && altitude > 0.0) {
        return Err(Error::config(
            "turbulence.conditions.altitude",
            format!("must be positive, got {altitude}"),
        ));
    }
    if !(wind_speed.is_finite() && wind_speed >= 0.0) {
        return Err(Error::config(
            "turbulence.conditions.wind_speed",
            format!("must be non-negative, got {wind_speed}"),
        ));
    }
    let h_ft = altitude * FEET_PER_METER;
    let length_u = h_ft / (0.177 + 0.000823 * h_ft).powf(1.2) / FEET_PER_METER;
    let length_v = 0.5 * length_u;
    let length_w = altitude;

    let sigma_u = 0.1 * wind_speed;
    let sigma_w = 0.7 * sigma_u;
    let speed = wind_speed.max(MIN_REFERENCE_SPEED);
    Ok(TurbulenceParams {
        u: AxisParams::new(DEFAULT_DAMPING, speed / length_u, sigma_u),
        v: AxisParams::new(DEFAULT_DAMPING, speed / length_v, sigma_u),
        w: AxisParams::new(DEFAULT_DAMPING, speed / length_w, sigma_w),
    })
}

/// Independent standard-normal streams per axis.
#[derive(Clone, Debug)]
pub struct NoiseDriver {
    seed: u64,
    streams: [ChaCha8Rng; 3],
}

impl NoiseDriver {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            streams: Axis::ALL.map(|a| rng::stream(seed, a.stream())),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&mut self, axis: Axis) -> f64 {
        self.streams[axis as usize].sample(StandardNormal)
    }
}

/// Stateful gust generator for one simulation run.
#[derive(Clone, Debug)]
pub struct TurbulenceGenerator {
    params: TurbulenceParams,
    axes: AxisSelection,
    state: TurbulenceState,
    driver: NoiseDriver,
    dt: f64,
}

impl TurbulenceGenerator {
    pub fn new(params: TurbulenceParams, axes: AxisSelection, seed: u64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        for axis in Axis::ALL {
            if axes.enabled(axis) {
                let p = params.axis(axis);
                p.validate(axis)?;
                p.check_step(axis, dt)?;
            }
        }
        Ok(Self {
            params,
            axes,
            state: TurbulenceState::default(),
            driver: NoiseDriver::new(seed),
            dt,
        })
    }

    pub fn state(&self) -> &TurbulenceState {
        &self.state
    }

    pub fn params(&self) -> &TurbulenceParams {
        &self.params
    }

    /// Gust at the current time.
    pub fn gust(&self) -> GustSample {
        sample_gust(&self.state, &self.axes)
    }

    /// Advances every enabled axis by `dt`.
    pub fn advance(&mut self) {
        for axis in Axis::ALL {
            if self.axes.enabled(axis) {
                let n = self.driver.sample(axis);
                let next = axis_step_unchecked(*self.state.axis(axis), self.params.axis(axis), n, self.dt);
                *self.state.axis_mut(axis) = next;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rest_state_stays_at_rest_without_noise() {
        let p = AxisParams::new(0.7, 2.0, 3.0);
        let mut s = AxisState::default();
        for _ in 0..10_000 {
            s = axis_step(s, &p, 0.0, 0.01).unwrap();
        }
        assert_eq!(s, AxisState::default());
    }

    #[test]
    fn free_response_matches_closed_form() {
        // g(0) = 1, g'(0) = 0, underdamped: g = e^{-zw t}(cos wd t + zw/wd sin wd t)
        let (zeta, wn) = (0.7, 1.0);
        let p = AxisParams::new(zeta, wn, 1.0);
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let dt = 0.01;
        let mut s = AxisState { g: 1.0, g_dot: 0.0 };
        for k in 1..=3000 {
            s = axis_step(s, &p, 0.0, dt).unwrap();
            let t = k as f64 * dt;
            let exact = (-zeta * wn * t).exp() * ((wd * t).cos() + zeta * wn / wd * (wd * t).sin());
            assert_abs_diff_eq!(s.g, exact, epsilon = 1e-9);
            if t > 15.0 {
                assert!(s.g.abs() < 1e-3);
            }
        }
    }

    #[test]
    fn stability_guard_names_axis() {
        let params = params_from_conditions(10.0, 70.0).unwrap();
        let err = TurbulenceGenerator::new(params, AxisSelection::default(), 1, 0.1).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "turbulence.axes.w.omega_n"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(axis_step(AxisState::default(), &AxisParams::new(0.7, 60.0, 1.0), 0.0, 0.01).is_err());
    }

    #[test]
    fn sample_gust_projection() {
        let mut state = TurbulenceState::default();
        state.u.g = 5.0;
        state.w.g = -2.0;
        state.v.g = 9.0;
        assert_eq!(sample_gust(&state, &AxisSelection::default()), GustSample::new(5.0, -2.0));
        assert_eq!(
            sample_gust(&TurbulenceState::default(), &AxisSelection::default()),
            GustSample::ZERO
        );
        let only_w = AxisSelection {
            u: false,
            v: false,
            w: true,
        };
        assert_eq!(sample_gust(&state, &only_w), GustSample::new(0.0, -2.0));
    }

    #[test]
    fn hurricane_conditions() {
        let p = params_from_conditions(10.0, 70.0).unwrap();
        assert_abs_diff_eq!(p.u.sigma, 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.w.sigma, 4.9, epsilon = 1e-12);
        assert_abs_diff_eq!(p.w.omega_n, 7.0, epsilon = 1e-12);
        // L_u from the handbook formula in feet, converted back to metres
        let h_ft: f64 = 10.0 / 0.3048;
        let lu = h_ft / (0.177 + 0.000823 * h_ft).powf(1.2) * 0.3048;
        assert_abs_diff_eq!(p.u.omega_n, 70.0 / lu, epsilon = 1e-12);
        assert!(Axis::ALL.iter().all(|&a| p.axis(a).zeta == 0.7));
        assert_eq!(p, params_from_conditions(10.0, 70.0).unwrap());
    }

    #[test]
    fn calm_air_gives_zero_gusts() {
        let p = params_from_conditions(10.0, 0.0).unwrap();
        assert!(Axis::ALL.iter().all(|&a| p.axis(a).sigma == 0.0 && p.axis(a).omega_n > 0.0));
        let mut gen = TurbulenceGenerator::new(p, AxisSelection::default(), 5, 0.01).unwrap();
        for _ in 0..1000 {
            gen.advance();
            assert_eq!(gen.gust(), GustSample::ZERO);
        }
    }

    #[test]
    fn rejects_bad_conditions() {
        assert!(params_from_conditions(0.0, 70.0).is_err());
        assert!(params_from_conditions(-3.0, 70.0).is_err());
        assert!(params_from_conditions(10.0, -1.0).is_err());
    }

    #[test]
    fn same_seed_same_sequence() {
        let p = params_from_conditions(10.0, 70.0).unwrap();
        let run = |seed| {
            let mut gen = TurbulenceGenerator::new(p, AxisSelection::default(), seed, 0.01).unwrap();
            (0..500)
                .map(|_| {
                    gen.advance();
                    gen.gust()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }
}
