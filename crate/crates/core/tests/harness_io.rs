use std::fs;

use quadest::error::Error;
use quadest::filters::FilterKind;
use quadest::harness::output::{fmt_f64, METRICS_HEADER};
use quadest::harness::{
    compute_metrics, read_numeric_csv, run_comparison, trajectory_header, write_outputs, ExperimentConfig, RunRecord,
};

fn short() -> ExperimentConfig {
    let mut exp = ExperimentConfig::default();
    exp.scenario.duration = 1.0;
    exp.filters.pf.particles = 300;
    exp
}

#[test]
fn trajectory_round_trips_bit_exactly() {
    let exp = short();
    let (res, metrics) = run_comparison(&exp, &FilterKind::ALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&exp, &res, &metrics, dir.path()).unwrap();

    let t = read_numeric_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(t.header, trajectory_header(&FilterKind::ALL));
    assert_eq!(t.rows.len(), 101);
    for (k, row) in t.rows.iter().enumerate() {
        assert_eq!(row[0].to_bits(), res.truth.times[k].to_bits());
        let truth = res.truth.states[k].to_vector();
        for i in 0..6 {
            assert_eq!(row[1 + i].to_bits(), truth[i].to_bits());
        }
        assert_eq!(row[7].to_bits(), res.truth.measurements[k][0].to_bits());
        assert_eq!(row[8].to_bits(), res.truth.measurements[k][1].to_bits());
        for (f, track) in res.tracks.iter().enumerate() {
            let base = 9 + 8 * f;
            let e = &track.estimates[k];
            for i in 0..6 {
                assert_eq!(row[base + i].to_bits(), e.mean[i].to_bits());
            }
            assert_eq!(row[base + 6].to_bits(), e.var[0].to_bits());
            assert_eq!(row[base + 7].to_bits(), e.var[1].to_bits());
        }
    }

    let g = read_numeric_csv(&dir.path().join("gusts.csv")).unwrap();
    assert_eq!(g.header, ["t", "u_g", "v_g", "w_g"]);
    assert_eq!(g.column("w_g").unwrap(), res.truth.gusts.iter().map(|v| v[2]).collect::<Vec<_>>());

    let m = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = m.lines();
    assert_eq!(lines.next().unwrap(), METRICS_HEADER.join(","));
    assert!(lines.next().unwrap().starts_with(&format!("measurement,{}", fmt_f64(metrics.measurement.rmse_pn))));
    assert!(dir.path().join("plot.py").exists());
}

#[test]
fn output_bytes_are_deterministic() {
    let exp = short();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (res, mut metrics) = run_comparison(&exp, &[FilterKind::Ekf]).unwrap();
        // Wall time is the one measured quantity; pin it so the bytes are comparable.
        for (_, m) in &mut metrics.filters {
            m.step_seconds = 0.0;
        }
        write_outputs(&exp, &res, &metrics, dir.path()).unwrap();
    }
    for name in ["trajectory.csv", "gusts.csv", "metrics.csv", "run.json", "plot.py"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn run_json_reproduces_the_run() {
    let mut exp = short();
    exp.scenario.seed = 77;
    let (res, metrics) = run_comparison(&exp, &[FilterKind::Ekf, FilterKind::Pf]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&exp, &res, &metrics, dir.path()).unwrap();

    let text = fs::read_to_string(dir.path().join("run.json")).unwrap();
    let record: RunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(record.resolved.seed, 77);
    assert_eq!(record.resolved.steps, 100);
    assert!(record.resolved.turbulence.is_some());

    let reloaded = ExperimentConfig::load(&dir.path().join("run.json")).unwrap();
    let kinds = reloaded.filters.enabled.clone();
    assert_eq!(kinds, vec![FilterKind::Ekf, FilterKind::Pf]);
    let (again, _) = run_comparison(&reloaded, &kinds).unwrap();
    assert_eq!(again.truth, res.truth);
    for (a, b) in again.tracks.iter().zip(&res.tracks) {
        assert_eq!(a.estimates, b.estimates);
    }
}

#[test]
fn metrics_match_a_reference_summation() {
    let exp = short();
    let (res, metrics) = run_comparison(&exp, &[FilterKind::Ukf]).unwrap();
    assert_eq!(compute_metrics(&res), metrics);
    let track = &res.tracks[0];
    let n = track.estimates.len();
    let mut ss = 0.0;
    let mut tv = 0.0;
    for k in 0..n {
        let d = track.estimates[k].mean[1] - res.truth.states[k].h;
        ss += d * d;
        if k > 0 {
            tv += (track.estimates[k].mean[1] - track.estimates[k - 1].mean[1]).abs();
        }
    }
    let m = metrics.filter(FilterKind::Ukf).unwrap();
    assert!((m.rmse_h - (ss / n as f64).sqrt()).abs() < 1e-12);
    assert!((m.tv_h - tv).abs() < 1e-12);
}

#[test]
fn unwritable_directory_reports_the_path() {
    let exp = short();
    let (res, metrics) = run_comparison(&exp, &[FilterKind::Ekf]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let target = blocker.join("out");
    match write_outputs(&exp, &res, &metrics, &target) {
        Err(Error::Io { path, .. }) => assert_eq!(path, target),
        other => panic!("unexpected {other:?}"),
    }
}
