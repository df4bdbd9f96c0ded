use nalgebra::{Matrix6, Vector2, Vector6};

use quadest::dynamics::{rates, ControlInput, GustSample, QuadrotorParams, StateVector};
use quadest::filters::{
    ekf_predict, ekf_update, Ekf, Estimator, GaussianBelief, Longitudinal, NoiseConfig, StepInput, Ukf, UkfParams,
};
use quadest::harness::{run_truth, ScenarioConfig};

fn fd_jacobian(x: &Vector6<f64>, input: &StepInput, p: &QuadrotorParams) -> Matrix6<f64> {
    let h = 1e-6;
    Matrix6::from_fn(|i, j| {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        (rates(&xp, &input.control, p, &input.gust)[i] - rates(&xm, &input.control, p, &input.gust)[i]) / (2.0 * h)
    })
}

#[test]
fn ekf_predict_matches_independent_discretisation() {
    let p = QuadrotorParams::default();
    let x = Vector6::new(1.0, 12.0, 3.0, -0.5, 0.3, 0.1);
    let input = StepInput::new(ControlInput::new(15.0, 0.01), GustSample::new(2.0, -1.0));
    let noise = NoiseConfig::reference_ekf();
    let mut cov = Matrix6::from_fn(|i, j| 0.05 * ((i * 5 + j) as f64).sin());
    cov = cov * cov.transpose() + Matrix6::identity() * 0.01;
    let prior = GaussianBelief::new(x, cov);
    let dt = 0.01;

    let post = ekf_predict(&prior, &Longitudinal::new(p), &input, dt, &noise).unwrap();

    let phi = Matrix6::identity() + fd_jacobian(&x, &input, &p) * dt;
    let q = Matrix6::from_fn(|i, j| if i == j { noise.q_diag[i] * dt } else { 0.0 });
    let expected = phi * cov * phi.transpose() + q;
    assert!((post.cov - expected).amax() < 1e-9, "{}", (post.cov - expected).amax());

    // Continuous Lyapunov flow over the same interval, finely sub-stepped: the
    // first-order discretisation agrees to O(dt^2).
    let f = fd_jacobian(&x, &input, &p);
    let qc = Matrix6::from_fn(|i, j| if i == j { noise.q_diag[i] } else { 0.0 });
    let mut pl = cov;
    let sub = 10;
    let h = dt / sub as f64;
    for _ in 0..sub {
        let d = |m: &Matrix6<f64>| f * m + m * f.transpose() + qc;
        let k1 = d(&pl);
        let k2 = d(&(pl + k1 * (h / 2.0)));
        let k3 = d(&(pl + k2 * (h / 2.0)));
        let k4 = d(&(pl + k3 * h));
        pl += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    let scale = (f.norm().powi(2) * cov.norm() + f.norm() * qc.norm()) * dt * dt;
    assert!((post.cov - pl).amax() <= scale, "{} > {scale}", (post.cov - pl).amax());
}

#[test]
fn ekf_update_matches_textbook_kalman_gain() {
    let mut cov = Matrix6::from_fn(|i, j| 0.1 * ((i + 3 * j) as f64).cos());
    cov = cov * cov.transpose() + Matrix6::identity() * 0.05;
    let prior = GaussianBelief::new(Vector6::new(0.0, 10.0, 0.0, 0.0, 0.0, 0.0), cov);
    let noise = NoiseConfig::new([0.0; 6], [0.02, 0.03]);
    let z = Vector2::new(0.2, 9.7);
    let post = ekf_update(&prior, &z, &noise).unwrap();

    let h = nalgebra::SMatrix::<f64, 2, 6>::from_fn(|i, j| if i == j { 1.0 } else { 0.0 });
    let s = h * cov * h.transpose() + noise.measurement_cov();
    let k = cov * h.transpose() * s.try_inverse().unwrap();
    let mean = prior.mean + k * (z - h * prior.mean);
    let p = (Matrix6::identity() - k * h) * cov;
    assert!((post.mean - mean).amax() < 1e-12);
    assert!((post.cov - p).amax() < 1e-12);
}

#[test]
fn covariances_stay_valid_over_long_runs() {
    let cfg = ScenarioConfig {
        duration: 1000.0,
        ..ScenarioConfig::disturbed()
    };
    let truth = run_truth(&cfg).unwrap();
    let p = cfg.quad;
    let prior = GaussianBelief::from_diagonal(StateVector::hover(10.0).to_vector(), [0.01, 0.01, 0.01, 0.01, 1e-4, 1e-4]);
    let mut ekf = Ekf::new(Longitudinal::new(p), prior, NoiseConfig::reference_ekf());
    let mut ukf = Ukf::new(Longitudinal::new(p), prior, NoiseConfig::reference_ukf(), UkfParams::default()).unwrap();
    assert_eq!(truth.controls.len(), 100_000);
    for k in 0..truth.controls.len() {
        let input = StepInput::new(truth.controls[k], truth.gust(k));
        let z = truth.measurements[k + 1];
        ekf.predict(&input, cfg.dt).unwrap();
        ekf.update(&z).unwrap();
        ukf.predict(&input, cfg.dt).unwrap();
        ukf.update(&z).unwrap();
        if k % 100 == 0 || k + 1 == truth.controls.len() {
            assert!(ekf.belief().is_valid(), "EKF covariance invalid at step {k}");
            assert!(ukf.belief().is_valid(), "UKF covariance invalid at step {k}");
        }
    }
}
