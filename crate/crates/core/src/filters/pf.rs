//! Bootstrap particle filter with systematic resampling.
//!
//! Process noise for particle `i` at step `k` is drawn from the keystream block `k` of
//! stream `PF_PARTICLE_BASE + i`, so propagation gives the same result whether the
//! particles are processed in parallel or one after another.

use nalgebra::{Vector2, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{check_measurement, Estimate, Estimator, FilterKind, GaussianBelief, NoiseConfig, ProcessModel, StepInput};
use crate::dynamics::wrap_angle;
use crate::error::{Error, Result};
use crate::rng;

/// Weighted particles. Weights are kept normalised.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<Vector6<f64>>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    /// Builds a set and normalises the weights.
    pub fn new(particles: Vec<Vector6<f64>>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InputDomain("particle set must not be empty".into()));
        }
        if particles.len() != weights.len() {
            return Err(Error::InputDomain(format!(
                "{} particles but {} weights",
                particles.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InputDomain("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InputDomain("weights sum to zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { particles, weights })
    }

    pub fn uniform(particles: Vec<Vector6<f64>>) -> Result<Self> {
        let n = particles.len();
        Self::new(particles, vec![1.0; n])
    }

    /// `n` equally weighted draws from `belief`.
    pub fn from_belief(belief: &GaussianBelief, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("pf.particles", "must be at least 1"));
        }
        // symmetric square root; tolerates singular (e.g. zero) covariances
        let eig = belief.cov.symmetric_eigen();
        let root = eig.eigenvectors * nalgebra::Matrix6::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let mut r = rng::stream(seed, rng::PF_INIT);
        let particles = (0..n)
            .map(|_| {
                let e = Vector6::from_fn(|_, _| r.sample::<f64, _>(StandardNormal));
                belief.mean + root * e
            })
            .collect();
        Self::uniform(particles)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Effective sample size `1 / sum w^2`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Weighted mean and marginal variances.
    pub fn estimate(&self) -> Estimate {
        let mean = self
            .particles
            .iter()
            .zip(&self.weights)
            .fold(Vector6::zeros(), |acc, (x, w)| acc + x * *w);
        let var = self.particles.iter().zip(&self.weights).fold(Vector6::zeros(), |acc, (x, w)| {
            let d = x - mean;
            acc + d.component_mul(&d) * *w
        });
        Estimate { mean, var }
    }
}

/// Systematic resampling with a single offset `u0` in `[0, 1)`.
pub fn systematic_resample(set: &ParticleSet, u0: f64) -> ParticleSet {
    let n = set.len();
    let step = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = set.weights[0];
    let mut i = 0;
    for j in 0..n {
        let position = (u0 + j as f64) * step;
        while cumulative <= position && i + 1 < n {
            i += 1;
            cumulative += set.weights[i];
        }
        out.push(set.particles[i]);
    }
    ParticleSet {
        particles: out,
        weights: vec![step; n],
    }
}

/// Random-stream address for one filter step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParticleRng {
    pub seed: u64,
    pub step: u64,
}

/// Propagates every particle and adds Gaussian process noise with covariance `diag(q) dt`.
pub fn pf_propagate<M: ProcessModel + ?Sized>(
    set: &mut ParticleSet,
    model: &M,
    input: &StepInput,
    dt: f64,
    noise: &NoiseConfig,
    rng_at: ParticleRng,
) {
    let std = Vector6::from_fn(|i, _| (noise.q_diag[i] * dt).sqrt());
    set.particles.par_iter_mut().enumerate().for_each(|(i, x)| {
        let mut r = rng::block(rng_at.seed, rng::PF_PARTICLE_BASE + i as u64, rng_at.step);
        let mut next = model.propagate(x, input, dt);
        for k in 0..6 {
            let n: f64 = r.sample(StandardNormal);
            next[k] += std[k] * n;
        }
        next[4] = wrap_angle(next[4]);
        *x = next;
    });
}

/// Multiplies weights by the Gaussian likelihood of `z` and renormalises, in the log
/// domain. Returns `false` (and resets to uniform weights) when no particle has a finite
/// log-weight.
pub fn pf_reweight(set: &mut ParticleSet, z: &Vector2<f64>, noise: &NoiseConfig) -> bool {
    let log_w: Vec<f64> = set
        .particles
        .iter()
        .zip(&set.weights)
        .map(|(x, w)| {
            let e0 = z[0] - x[0];
            let e1 = z[1] - x[1];
            let ll = -0.5 * (e0 * e0 / noise.r_diag[0] + e1 * e1 / noise.r_diag[1]);
            let lw = w.ln() + ll;
            if lw.is_nan() {
                f64::NEG_INFINITY
            } else {
                lw
            }
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = set.len();
    if !max.is_finite() {
        set.weights = vec![1.0 / n as f64; n];
        return false;
    }
    let mut total = 0.0;
    for (w, lw) in set.weights.iter_mut().zip(&log_w) {
        *w = (lw - max).exp();
        total += *w;
    }
    for w in &mut set.weights {
        *w /= total;
    }
    true
}

/// Result of one [`pf_step`].
#[derive(Clone, Debug)]
pub struct PfStepOutput {
    pub set: ParticleSet,
    pub estimate: Estimate,
    /// ESS after reweighting, before any resampling.
    pub ess: f64,
    pub resampled: bool,
    /// Weights collapsed and were reset to uniform.
    pub degenerate: bool,
}

fn weight_and_resample(set: &mut ParticleSet, z: &Vector2<f64>, noise: &NoiseConfig, rng_at: ParticleRng) -> PfStepOutput {
    let ok = pf_reweight(set, z, noise);
    let estimate = set.estimate();
    let ess = set.ess();
    let resampled = ess < 0.5 * set.len() as f64;
    if resampled {
        let u0: f64 = rng::block(rng_at.seed, rng::PF_RESAMPLE, rng_at.step).random();
        *set = systematic_resample(set, u0);
    }
    PfStepOutput {
        set: set.clone(),
        estimate,
        ess,
        resampled,
        degenerate: !ok,
    }
}

/// One bootstrap step: propagate, weight by `z`, estimate, resample if ESS < N/2.
#[allow(clippy::too_many_arguments)]
pub fn pf_step<M: ProcessModel + ?Sized>(
    set: &ParticleSet,
    model: &M,
    input: &StepInput,
    z: &Vector2<f64>,
    dt: f64,
    noise: &NoiseConfig,
    rng_at: ParticleRng,
) -> Result<PfStepOutput> {
    check_measurement(z)?;
    let mut next = set.clone();
    pf_propagate(&mut next, model, input, dt, noise, rng_at);
    Ok(weight_and_resample(&mut next, z, noise, rng_at))
}

/// Bootstrap particle filter.
#[derive(Clone, Debug)]
pub struct ParticleFilter<M> {
    model: M,
    set: ParticleSet,
    noise: NoiseConfig,
    seed: u64,
    step: u64,
    estimate: Estimate,
    last_ess: f64,
}

impl<M: ProcessModel> ParticleFilter<M> {
    pub fn new(model: M, initial: &GaussianBelief, particles: usize, noise: NoiseConfig, seed: u64) -> Result<Self> {
        let set = ParticleSet::from_belief(initial, particles, seed)?;
        let estimate = set.estimate();
        let last_ess = set.ess();
        Ok(Self {
            model,
            set,
            noise,
            seed,
            step: 0,
            estimate,
            last_ess,
        })
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.set
    }

    pub fn last_ess(&self) -> f64 {
        self.last_ess
    }
}

impl<M: ProcessModel> Estimator for ParticleFilter<M> {
    fn kind(&self) -> FilterKind {
        FilterKind::Pf
    }

    fn predict(&mut self, input: &StepInput, dt: f64) -> Result<()> {
        let at = ParticleRng {
            seed: self.seed,
            step: self.step,
        };
        pf_propagate(&mut self.set, &self.model, input, dt, &self.noise, at);
        self.estimate = self.set.estimate();
        Ok(())
    }

    fn update(&mut self, z: &Vector2<f64>) -> Result<()> {
        check_measurement(z)?;
        let at = ParticleRng {
            seed: self.seed,
            step: self.step,
        };
        self.step += 1;
        let out = weight_and_resample(&mut self.set, z, &self.noise, at);
        self.estimate = out.estimate;
        self.last_ess = out.ess;
        if out.degenerate {
            return Err(Error::Degeneracy {
                step: self.step as usize,
            });
        }
        Ok(())
    }

    fn estimate(&self) -> Estimate {
        self.estimate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ControlInput, GustSample, QuadrotorParams, StateVector};
    use crate::filters::Longitudinal;
    use approx::assert_abs_diff_eq;

    fn input() -> StepInput {
        StepInput::new(ControlInput::hover_trim(&QuadrotorParams::default()), GustSample::ZERO)
    }

    #[test]
    fn single_particle() {
        let x = Vector6::new(0., 10., 1., 0.5, 0.05, 0.1);
        let set = ParticleSet::uniform(vec![x]).unwrap();
        let noise = NoiseConfig::new([0.0; 6], [1.0, 1.0]);
        let model = Longitudinal::default();
        let out = pf_step(&set, &model, &input(), &Vector2::new(3.0, 4.0), 0.01, &noise, ParticleRng { seed: 1, step: 0 })
            .unwrap();
        let expected = model.propagate(&x, &input(), 0.01);
        assert_abs_diff_eq!(out.estimate.mean, expected, epsilon = 1e-15);
        assert!(!out.resampled);
        assert_eq!(out.set.particles, vec![expected]);
        assert_eq!(out.set.weights, vec![1.0]);
    }

    #[test]
    fn uniform_systematic_resampling_keeps_each_particle_once() {
        let particles: Vec<_> = (0..97).map(|i| Vector6::repeat(i as f64)).collect();
        let set = ParticleSet::uniform(particles.clone()).unwrap();
        for u0 in [0.5, 0.1, 0.9, 0.999] {
            let out = systematic_resample(&set, u0);
            assert_eq!(out.particles, particles);
        }
    }

    #[test]
    fn resampling_follows_weights() {
        let particles = vec![Vector6::repeat(0.0), Vector6::repeat(1.0), Vector6::repeat(2.0), Vector6::repeat(3.0)];
        let set = ParticleSet::new(particles, vec![0.0, 0.75, 0.0, 0.25]).unwrap();
        let out = systematic_resample(&set, 0.3);
        let picks: Vec<f64> = out.particles.iter().map(|p| p[0]).collect();
        assert_eq!(picks, vec![1.0, 1.0, 1.0, 3.0]);
    }

    #[test]
    fn set_validation() {
        assert!(ParticleSet::uniform(vec![]).is_err());
        assert!(ParticleSet::new(vec![Vector6::zeros()], vec![1.0, 2.0]).is_err());
        assert!(ParticleSet::new(vec![Vector6::zeros()], vec![-1.0]).is_err());
        assert!(ParticleSet::new(vec![Vector6::zeros()], vec![0.0]).is_err());
        let s = ParticleSet::new(vec![Vector6::zeros(), Vector6::zeros()], vec![1.0, 3.0]).unwrap();
        assert_eq!(s.weights, vec![0.25, 0.75]);
    }

    #[test]
    fn collapse_resets_to_uniform() {
        let mut set = ParticleSet::uniform(vec![Vector6::repeat(f64::NAN); 4]).unwrap();
        let ok = pf_reweight(&mut set, &Vector2::new(0.0, 0.0), &NoiseConfig::identity());
        assert!(!ok);
        assert_eq!(set.weights, vec![0.25; 4]);
    }

    #[test]
    fn filter_reports_degeneracy_and_continues() {
        let b = GaussianBelief::new(StateVector::hover(10.0).to_vector(), nalgebra::Matrix6::zeros());
        let mut pf = ParticleFilter::new(Longitudinal::default(), &b, 8, NoiseConfig::identity(), 3).unwrap();
        pf.predict(&StepInput::new(ControlInput::new(f64::NAN, 0.0), GustSample::ZERO), 0.01)
            .unwrap();
        assert!(matches!(pf.update(&Vector2::new(0.0, 10.0)), Err(Error::Degeneracy { step: 1 })));
        let total: f64 = pf.particles().weights.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_normalised_and_ess_in_range() {
        let mut cov = nalgebra::Matrix6::identity() * 0.01;
        cov[(4, 4)] = 1e-4;
        cov[(5, 5)] = 1e-4;
        let b = GaussianBelief::new(StateVector::hover(10.0).to_vector(), cov);
        let mut pf = ParticleFilter::new(Longitudinal::default(), &b, 500, NoiseConfig::reference_pf(), 9).unwrap();
        for k in 0..50 {
            pf.predict(&input(), 0.01).unwrap();
            pf.update(&Vector2::new(0.001 * k as f64, 10.0)).unwrap();
            let total: f64 = pf.particles().weights.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            assert!(pf.last_ess() >= 1.0 - 1e-9 && pf.last_ess() <= 500.0 + 1e-9);
        }
    }

    #[test]
    fn propagation_independent_of_thread_count() {
        let b = GaussianBelief::from_diagonal(StateVector::hover(10.0).to_vector(), [0.1; 6]);
        let set = ParticleSet::from_belief(&b, 300, 5).unwrap();
        let noise = NoiseConfig::reference_pf();
        let model = Longitudinal::default();
        let at = ParticleRng { seed: 5, step: 17 };
        let mut a = set.clone();
        pf_propagate(&mut a, &model, &input(), 0.01, &noise, at);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let mut b2 = set.clone();
        pool.install(|| pf_propagate(&mut b2, &model, &input(), 0.01, &noise, at));
        assert_eq!(a, b2);
    }
}
