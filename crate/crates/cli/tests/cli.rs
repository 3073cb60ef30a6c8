use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_kappa_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"params":{"M":1,"theta0":0.25,"h":6.283185307179586},"experiment":{"kind":"critical-length"}}"#,
    );
    let out = quench(&["critical-length", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));
}

#[test]
fn subcommand_must_match_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cl.json",
        r#"{"params":{"kappa":1,"M":1,"theta0":0.25,"h":6.283185307179586},"experiment":{"kind":"critical-length"}}"#,
    );
    let out = quench(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let out = quench(&["simulate", "--config", &dir.path().join("none.json").to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn critical_length_writes_artifacts_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = quench(&["critical-length", "--out", &a.to_string_lossy(), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = quench(&["critical-length", "--out", &b.to_string_lossy(), "--threads", "4"]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["ell_report.json", "plot/time_map.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("ell_report.json")).unwrap()).unwrap();
    assert!((report["ell_tilde"].as_f64().unwrap() - 6.669).abs() < 1e-3);
    let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"timestamp\""));
    assert!(manifest.contains("\"kappa\": 1.0"));
}

#[test]
fn capped_search_exits_with_no_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ca.json",
        r#"{"params":{"kappa":1,"M":1,"theta0":0.25,"h":6.283185307179586},
            "experiment":{"kind":"critical-amplitude","L":[4]},
            "numerics":{"grid":{"dx":0.25,"dt":0.1},"horizon":10,"search":{"spot_check":false}}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = quench(&["critical-amplitude", "--config", &cfg, "--cap", "2", "--out", &out_dir.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"a_cap\": 2.0"));
    assert!(out_dir.join("amplitudes.csv").exists());
}

#[test]
fn print_config_expands_defaults() {
    let out = quench(&["mc-verify", "--print-config", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"seed\": 42"));
    assert!(text.contains("\"n_paths\""));
}
