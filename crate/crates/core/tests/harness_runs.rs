use std::fs;
use std::path::Path;

use quench_core::harness::{
    self, alpha_sweep, config_from_manifest, example_config, Experiment, Regime, RunConfig, SweepMode,
    EXIT_CLIPPED, EXIT_NO_BRACKET, EXIT_OK,
};
use quench_core::pde::{Equation, GridPolicy, Window};
use quench_core::InitialData;
use statrs::function::erf::erf;

fn heat_config(dir: &Path, dx: f64) -> RunConfig {
    let mut c = example_config("simulate").unwrap();
    c.reaction.family = "zero".into();
    c.experiment = Experiment::Simulate {
        amplitude: 0.0,
        initial: InitialData::sharp(2.0).unwrap(),
        equation: Equation::Reactive,
        snapshot_times: vec![0.5, 2.0],
    };
    c.numerics.horizon = 2.0;
    c.numerics.grid = GridPolicy {
        dx: Some(dx),
        dt: 0.01,
        ..Default::default()
    };
    c.output_dir = dir.to_path_buf();
    c
}

fn erf_solution(t: f64, x: f64, l: f64) -> f64 {
    let s = (4.0 * t).sqrt();
    0.5 * (erf((l - x) / s) + erf((l + x) / s))
}

fn snapshot_error(dir: &Path) -> f64 {
    let mut r = csv::Reader::from_path(dir.join("snapshots.csv")).unwrap();
    let mut worst: f64 = 0.0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        worst = worst.max((v[3] - erf_solution(v[0], v[1], 2.0)).abs());
    }
    worst
}

#[test]
fn pure_heat_snapshots_match_erf() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = harness::run(&heat_config(a.path(), 0.125)).unwrap();
    assert_eq!(ra.exit_code, EXIT_OK);
    harness::run(&heat_config(b.path(), 0.0625)).unwrap();
    let (ea, eb) = (snapshot_error(a.path()), snapshot_error(b.path()));
    assert!(ea < 1e-2, "coarse error {ea}");
    assert!(eb < 0.6 * ea, "refinement {ea} -> {eb}");
}

fn files(dir: &Path, names: &[&str]) -> Vec<Vec<u8>> {
    names.iter().map(|n| fs::read(dir.join(n)).unwrap()).collect()
}

fn strip_timestamp(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn reruns_are_byte_identical_and_reproducible_from_manifest() {
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    let cfg = heat_config(a.path(), 0.25);
    harness::run(&cfg).unwrap();
    harness::run(&RunConfig {
        output_dir: b.path().to_path_buf(),
        ..cfg.clone()
    })
    .unwrap();
    let mut from_manifest = config_from_manifest(&a.path().join("manifest.json")).unwrap();
    from_manifest.output_dir = c.path().to_path_buf();
    harness::run(&from_manifest).unwrap();

    let names = ["snapshots.csv", "sup_history.csv", "summary.json", "plot/sup_history.csv"];
    assert_eq!(files(a.path(), &names), files(b.path(), &names));
    assert_eq!(files(a.path(), &names), files(c.path(), &names));

    let (ma, mb) = (
        strip_timestamp(&a.path().join("manifest.json")),
        strip_timestamp(&b.path().join("manifest.json")),
    );
    let mut mb = mb;
    mb["config"]["output_dir"] = ma["config"]["output_dir"].clone();
    assert_eq!(ma, mb);
}

#[test]
fn quenching_run_has_monotone_tail() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = example_config("simulate").unwrap();
    c.experiment = Experiment::Simulate {
        amplitude: 0.0,
        initial: InitialData::sharp(0.5).unwrap(),
        equation: Equation::Reactive,
        snapshot_times: vec![],
    };
    c.numerics.horizon = 30.0;
    c.output_dir = dir.path().to_path_buf();
    harness::run(&c).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let tau = summary["outcome"]["tau_detect"].as_f64().expect("quenches");
    let mut r = csv::Reader::from_path(dir.path().join("plot/sup_history.csv")).unwrap();
    let tail: Vec<f64> = r
        .records()
        .map(|r| r.unwrap())
        .filter(|r| r[1].parse::<f64>().unwrap() >= tau)
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert!(tail.len() > 10);
    assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn exit_codes_distinguish_no_bracket_and_clipping() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = example_config("critical-amplitude").unwrap();
    c.experiment = Experiment::CriticalAmplitude { half_widths: vec![4.0] };
    c.numerics.search.a_cap = 2.0;
    c.numerics.search.spot_check = false;
    c.output_dir = dir.path().to_path_buf();
    let r = harness::run(&c).unwrap();
    assert_eq!(r.exit_code, EXIT_NO_BRACKET);
    let csv = fs::read_to_string(dir.path().join("amplitudes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let mut c = example_config("simulate").unwrap();
    c.experiment = Experiment::Simulate {
        amplitude: 0.0,
        initial: InitialData::sharp(10.0).unwrap(),
        equation: Equation::Reactive,
        snapshot_times: vec![],
    };
    c.numerics.horizon = 5.0;
    c.numerics.grid.window = Window::Margins { left: 0.5, right: 0.5 };
    c.output_dir = dir.path().to_path_buf();
    assert_eq!(harness::run(&c).unwrap().exit_code, EXIT_CLIPPED);
}

#[test]
fn sweep_rows_do_not_depend_on_regime_order() {
    let base = example_config("alpha-sweep").unwrap();
    let regime = |name: &str, alphas: Vec<f64>| Regime {
        name: name.into(),
        alphas,
        grid: None,
        horizon: Some(5.0),
        fit: false,
    };
    let mut base = base;
    base.numerics.search.rel_tol = 0.25;
    base.numerics.search.spot_check = false;
    let a = alpha_sweep(
        &base,
        &[regime("x", vec![2.0]), regime("y", vec![4.0])],
        SweepMode::LAtFixedA,
        8.0,
    )
    .unwrap();
    let b = alpha_sweep(
        &base,
        &[regime("y", vec![4.0]), regime("x", vec![2.0])],
        SweepMode::LAtFixedA,
        8.0,
    )
    .unwrap();
    assert_eq!(a.rows, b.rows);
    assert!(a.rows[0].alpha < a.rows[1].alpha);
}

#[test]
fn unit_alpha_round_trips_between_modes() {
    let base = example_config("alpha-sweep").unwrap();
    let unit = Regime {
        name: "unit".into(),
        alphas: vec![1.0],
        grid: None,
        horizon: Some(20.0),
        fit: false,
    };
    let a0 = alpha_sweep(&base, std::slice::from_ref(&unit), SweepMode::A0AtFixedL, 4.0).unwrap();
    let amp = a0.rows[0].midpoint().expect("bracketed");
    let la = alpha_sweep(&base, &[unit], SweepMode::LAtFixedA, amp).unwrap();
    let l = la.rows[0].midpoint().expect("bracketed");
    assert!((l / 4.0 - 1.0).abs() <= 0.2, "A0(4) = {amp}, L_A = {l}");
}
