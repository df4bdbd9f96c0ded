//! Scaled unscented transform and the UKF built on it.
//!
//! With `n = 6` and `lambda = alpha^2 (n + kappa) - n`:
//!
//! ```text
//! x_0 = m,   x_i = m + (sqrt((n + lambda) P))_i,   x_{n+i} = m - (sqrt((n + lambda) P))_i
//! Wm_0 = lambda / (n + lambda)
//! Wc_0 = Wm_0 + 1 - alpha^2 + beta
//! Wm_i = Wc_i = 1 / (2 (n + lambda))
//! ```
//!
//! The square root is the lower Cholesky factor. If the factorisation fails, diagonal
//! jitter from 1e-12 up to 1e-6 is added before giving up.

use nalgebra::{Matrix2, Matrix6, SMatrix, SVector, Vector2, Vector6};

use super::{
    check_measurement, finish_cov, Estimate, Estimator, FilterKind, GaussianBelief, NoiseConfig, ProcessModel,
    StepInput, UkfParams,
};
use crate::error::{Error, Result};

pub const SIGMA_COUNT: usize = 13;

const JITTER_LADDER: [f64; 7] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// `2n + 1` sigma points and their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaPointSet {
    pub points: [Vector6<f64>; SIGMA_COUNT],
    pub wm: [f64; SIGMA_COUNT],
    pub wc: [f64; SIGMA_COUNT],
}

/// Mean and covariance weights for `params`.
pub fn ukf_weights(params: &UkfParams) -> ([f64; SIGMA_COUNT], [f64; SIGMA_COUNT]) {
    let n = UkfParams::STATE_DIM;
    let lambda = params.lambda();
    let w = 1.0 / (2.0 * (n + lambda));
    let mut wm = [w; SIGMA_COUNT];
    let mut wc = [w; SIGMA_COUNT];
    wm[0] = lambda / (n + lambda);
    wc[0] = wm[0] + (1.0 - params.alpha * params.alpha + params.beta);
    (wm, wc)
}

fn cholesky_with_jitter(m: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    if let Some(c) = m.cholesky() {
        return Ok(c.l());
    }
    for jitter in JITTER_LADDER {
        if let Some(c) = (m + Matrix6::identity() * jitter).cholesky() {
            return Ok(c.l());
        }
    }
    Err(Error::DegenerateCovariance(
        "Cholesky factorisation failed after jitter up to 1e-6".into(),
    ))
}

pub fn ukf_sigma_points(belief: &GaussianBelief, params: &UkfParams) -> Result<SigmaPointSet> {
    params.validate()?;
    if !belief.mean.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateCovariance("non-finite mean".into()));
    }
    let n = UkfParams::STATE_DIM;
    let root = cholesky_with_jitter(&(belief.cov * (n + params.lambda())))?;
    let mut points = [belief.mean; SIGMA_COUNT];
    for i in 0..6 {
        let col = root.column(i);
        points[1 + i] = belief.mean + col;
        points[7 + i] = belief.mean - col;
    }
    let (wm, wc) = ukf_weights(params);
    Ok(SigmaPointSet { points, wm, wc })
}

/// Pushes every sigma point through `f` and returns the weighted mean, the weighted
/// covariance and the transformed points.
pub fn unscented_transform<const D: usize, F>(
    set: &SigmaPointSet,
    f: F,
) -> (SVector<f64, D>, SMatrix<f64, D, D>, [SVector<f64, D>; SIGMA_COUNT])
where
    F: Fn(&Vector6<f64>) -> SVector<f64, D>,
{
    let mapped: [SVector<f64, D>; SIGMA_COUNT] = std::array::from_fn(|i| f(&set.points[i]));
    let mean = mapped
        .iter()
        .zip(set.wm.iter())
        .fold(SVector::<f64, D>::zeros(), |acc, (y, w)| acc + y * *w);
    let cov = mapped
        .iter()
        .zip(set.wc.iter())
        .fold(SMatrix::<f64, D, D>::zeros(), |acc, (y, w)| {
            let d = y - mean;
            acc + d * d.transpose() * *w
        });
    (mean, cov, mapped)
}

/// UKF time update.
pub fn ukf_predict<M: ProcessModel + ?Sized>(
    belief: &GaussianBelief,
    model: &M,
    input: &StepInput,
    dt: f64,
    noise: &NoiseConfig,
    params: &UkfParams,
) -> Result<GaussianBelief> {
    let set = ukf_sigma_points(belief, params)?;
    let (mean, cov, _) = unscented_transform(&set, |x| model.propagate(x, input, dt));
    Ok(GaussianBelief::new(mean, finish_cov(cov + noise.process_cov(dt))?))
}

/// UKF measurement update.
pub fn ukf_update(
    belief: &GaussianBelief,
    z: &Vector2<f64>,
    noise: &NoiseConfig,
    params: &UkfParams,
) -> Result<GaussianBelief> {
    check_measurement(z)?;
    let set = ukf_sigma_points(belief, params)?;
    let (z_mean, z_cov, z_points) = unscented_transform(&set, |x| Vector2::new(x[0], x[1]));
    let s: Matrix2<f64> = z_cov + noise.measurement_cov();
    let cross = (0..SIGMA_COUNT).fold(SMatrix::<f64, 6, 2>::zeros(), |acc, i| {
        acc + (set.points[i] - belief.mean) * (z_points[i] - z_mean).transpose() * set.wc[i]
    });
    let s_inv = s
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularUpdate(format!("innovation covariance {s:?} is not invertible")))?;
    let gain = cross * s_inv;
    let mean = belief.mean + gain * (z - z_mean);
    let cov = belief.cov - gain * s * gain.transpose();
    Ok(GaussianBelief::new(mean, finish_cov(cov)?))
}

/// Unscented Kalman filter.
#[derive(Clone, Debug)]
pub struct Ukf<M> {
    model: M,
    belief: GaussianBelief,
    noise: NoiseConfig,
    params: UkfParams,
}

impl<M: ProcessModel> Ukf<M> {
    pub fn new(model: M, initial: GaussianBelief, noise: NoiseConfig, params: UkfParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            model,
            belief: initial,
            noise,
            params,
        })
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }
}

impl<M: ProcessModel> Estimator for Ukf<M> {
    fn kind(&self) -> FilterKind {
        FilterKind::Ukf
    }

    fn predict(&mut self, input: &StepInput, dt: f64) -> Result<()> {
        self.belief = ukf_predict(&self.belief, &self.model, input, dt, &self.noise, &self.params)?;
        Ok(())
    }

    fn update(&mut self, z: &Vector2<f64>) -> Result<()> {
        self.belief = ukf_update(&self.belief, z, &self.noise, &self.params)?;
        Ok(())
    }

    fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.belief.mean,
            var: self.belief.cov.diagonal(),
        }
    }
}
