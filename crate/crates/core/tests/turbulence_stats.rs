use quadest::error::Error;
use quadest::turbulence::{AxisParams, AxisSelection, TurbulenceGenerator, TurbulenceParams};

fn params(sigma: f64) -> TurbulenceParams {
    TurbulenceParams {
        u: AxisParams::new(0.7, 2.0, sigma),
        v: AxisParams::new(0.7, 2.0, sigma),
        w: AxisParams::new(0.7, 4.0, sigma),
    }
}

fn series(p: TurbulenceParams, steps: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut g = TurbulenceGenerator::new(p, AxisSelection::default(), seed, 0.01).unwrap();
    (0..steps)
        .map(|_| {
            g.advance();
            let s = g.gust();
            (s.u_g, s.w_g)
        })
        .collect()
}

#[test]
fn stationary_variance_and_mean() {
    let s = series(params(3.0), 1_000_000, 21);
    let n = s.len() as f64;
    let mean = s.iter().map(|v| v.0).sum::<f64>() / n;
    let std = (s.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!((2.85..=3.15).contains(&std), "std {std}");
    assert!(mean.abs() <= 0.05 * 3.0, "mean {mean}");
}

#[test]
fn sigma_scales_the_path_exactly() {
    // Doubling sigma doubles the input gain; every sample doubles bit for bit.
    let a = series(params(1.5), 10_000, 5);
    let b = series(params(3.0), 10_000, 5);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(2.0 * x.0, y.0);
        assert_eq!(2.0 * x.1, y.1);
    }
}

#[test]
fn seeds_select_independent_paths() {
    let a = series(params(1.0), 1000, 1);
    let b = series(params(1.0), 1000, 2);
    assert_eq!(a, series(params(1.0), 1000, 1));
    assert_ne!(a, b);
}

#[test]
fn unstable_step_is_rejected_with_the_axis_named() {
    let mut p = params(1.0);
    p.w.omega_n = 60.0;
    match TurbulenceGenerator::new(p, AxisSelection::default(), 0, 0.01) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "turbulence.axes.w.omega_n"),
        other => panic!("unexpected {other:?}"),
    }
    let lateral_off = AxisSelection { u: true, v: false, w: false };
    let mut q = params(1.0);
    q.v.omega_n = 60.0;
    assert!(TurbulenceGenerator::new(q, lateral_off, 0, 0.01).is_ok());
}
