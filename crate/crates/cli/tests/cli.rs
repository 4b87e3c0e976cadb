//! End-to-end runs of the `collapse` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_collapse"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let start = text.find('{').expect("JSON object in output");
    serde_json::from_str(&text[start..]).expect("valid JSON")
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn kaon_defaults() {
    let out = run(&["kaon"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("|K0: s dbar> - "), "{text}");
    assert!(text.contains("~1e-4 s"));
    let v = stdout_json(&out);
    assert_eq!(v["delta_e_total_mev"].as_f64(), Some(400.0));
    let tc = v["predicted_tc_seconds"].as_f64().unwrap();
    assert!((tc / 5.02e-5 - 1.0).abs() < 5e-3, "{tc}");
}

#[test]
fn kaon_k_and_mass_overrides() {
    let v = stdout_json(&run(&["kaon", "--k", "2"]));
    let tc = v["predicted_tc_seconds"].as_f64().unwrap();
    assert!((tc / 1.005e-4 - 1.0).abs() < 5e-3, "{tc}");
    assert_eq!(v["k"].as_f64(), Some(2.0));

    let dir = tempfile::tempdir().unwrap();
    let masses = dir.path().join("masses.json");
    std::fs::write(&masses, r#"{"s": 400, "d": 400}"#).unwrap();
    let v = stdout_json(&run(&["kaon", "--masses", masses.to_str().unwrap()]));
    assert_eq!(v["predicted_tc_seconds"], "no_collapse");

    std::fs::write(&masses, r#"{"s": 400}"#).unwrap();
    assert_eq!(run(&["kaon", "--masses", masses.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn kaon_writes_report_manifest_and_structure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kaon.json");
    let st = dir.path().join("kaon_structure.json");
    let o = run(&["kaon", "--out", out.to_str().unwrap(), "--structure-out", st.to_str().unwrap()]);
    assert!(o.status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["hypothesis_name"], "K_L");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("kaon.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "kaon");
    assert!(manifest["timestamp"].is_string());
    assert_eq!(manifest["parameters"]["masses"]["s"].as_f64(), Some(500.0));

    // the emitted structure feeds straight back into predict
    let v = stdout_json(&run(&["predict", "--structure", st.to_str().unwrap()]));
    assert_eq!(v, report);
}

#[test]
fn predict_structure_files() {
    let kaon = data("kaon.json");
    let v = stdout_json(&run(&["predict", "--structure", kaon.to_str().unwrap()]));
    assert_eq!(v["delta_e_total_mev"].as_f64(), Some(400.0));
    assert!((v["predicted_tc_seconds"].as_f64().unwrap() / 5.02e-5 - 1.0).abs() < 5e-3);
    assert!(v.get("log10_ratio").is_none());

    let v = stdout_json(&run(&["predict", "--structure", kaon.to_str().unwrap(), "--measured", "1e-4"]));
    let r = v["log10_ratio"].as_f64().unwrap();
    assert!((r - (-0.299)).abs() < 1e-3, "{r}");

    let v = stdout_json(&run(&["predict", "--structure", data("structureless.json").to_str().unwrap()]));
    assert_eq!(v["predicted_tc_seconds"], "no_collapse");
    assert_eq!(v["delta_e_total_mev"].as_f64(), Some(0.0));

    let v = stdout_json(&run(&["predict", "--structure", data("kaon_split_quarks.json").to_str().unwrap()]));
    assert_eq!(v["delta_e_total_mev"].as_f64(), Some(800.0));
    assert!((v["predicted_tc_seconds"].as_f64().unwrap() / 1.26e-5 - 1.0).abs() < 5e-3);
}

#[test]
fn predict_schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"name": "x", "amplitudes": [[1,0],[1,0]],
            "branches": [{"name": "a", "mass_mev": 1}, {"name": "b", "constituents": [{"name": "q"}]}]}"#,
    )
    .unwrap();
    let o = run(&["predict", "--structure", bad.to_str().unwrap(), "--masses", data("structureless.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let masses = dir.path().join("m.json");
    std::fs::write(&masses, "{}").unwrap();
    let o = run(&["predict", "--structure", bad.to_str().unwrap(), "--masses", masses.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("branches[1].constituents[0]"), "{err}");

    std::fs::write(&bad, "{\"name\": \"x\",\n \"amplitudes\": 3}").unwrap();
    let o = run(&["predict", "--structure", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // leaf count mismatch
    std::fs::write(
        &bad,
        r#"{"name": "x", "amplitudes": [[1,0],[1,0]],
            "branches": [{"name": "a", "mass_mev": 1}, {"name": "b", "constituents": [{"name": "p", "mass_mev": 1}, {"name": "q", "mass_mev": 2}]}]}"#,
    )
    .unwrap();
    let o = run(&["predict", "--structure", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("leaf count mismatch"));
}

#[test]
fn sweep_rows_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["sweep", "--delta-e-min", "100", "--delta-e-max", "1000", "--points", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, vec!["delta_e_mev", "tc_seconds"]);
    assert_eq!(rows.len(), 3);
    let expected = [(100.0, 8.04e-4), (316.2, 8.04e-5), (1000.0, 8.04e-6)];
    for (row, (de, tc)) in rows.iter().zip(expected) {
        assert!((row[0] - de).abs() < 0.05, "{row:?}");
        assert!((row[1] / tc - 1.0).abs() < 1e-3, "{row:?}");
    }
    assert!(dir.path().join("sweep.csv.manifest.json").exists());

    let o = run(&["sweep", "--delta-e-min", "1", "--delta-e-max", "1e4", "--points", "17", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&out);
    for w in rows.windows(2) {
        let slope = (w[1][1].ln() - w[0][1].ln()) / (w[1][0].ln() - w[0][0].ln());
        assert!((slope + 2.0).abs() < 1e-6, "{slope}");
    }

    let o = run(&["sweep", "--delta-e-min", "50", "--delta-e-max", "60", "--points", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 50.0);

    for min in ["0", "-5"] {
        let o = run(&["sweep", "--delta-e-min", min, "--delta-e-max", "10", "--points", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
    }
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join(name);
    let mut args = vec![
        "simulate", "--trajectories", "200", "--dt", "1e-3", "--t-max", "1", "--seed", "4", "--dimensionless",
        "--out", out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    (run(&args), out)
}

#[test]
fn simulate_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = simulate(dir.path(), "a.csv", &["--delta-e", "1", "--alpha", "1.0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header.join(","), collapse_cli::commands::SIMULATE_HEADER);
    assert!(rows.iter().all(|r| r[1] == 1.0 && r[7] == 200.0));

    let (o, out) = simulate(dir.path(), "b.csv", &["--delta-e", "0", "--alpha", "0.3"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&out);
    let first = rows[0][2];
    assert!(rows.iter().all(|r| (r[2] - first).abs() < 1e-12 && r[7] == 0.0 && r[8] == 0.0));

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(4));
    assert_eq!(manifest["metadata"]["phase_mode"], "schrodinger");
    assert_eq!(manifest["metadata"]["collapse_threshold"].as_f64(), Some(0.9999));
}

#[test]
fn simulate_physical_units() {
    // 400 MeV: rate = dE^2 / (hbar E_p) ~ 2e4 /s, so t_c ~ 5e-5 s
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phys.csv");
    let o = run(&[
        "simulate", "--delta-e", "400", "--alpha", "0.5", "--trajectories", "400", "--dt", "2e-7", "--t-max", "1e-4",
        "--seed", "2", "--record-stride", "25", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv_rows(&out);
    for r in &rows {
        assert!((r[2] - r[9]).abs() < 0.05, "{r:?}");
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("phys.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["metadata"]["phase_mode"], "interaction");
}

#[test]
fn simulate_errors() {
    let dir = tempfile::tempdir().unwrap();
    // missing flags: usage
    assert_eq!(run(&["simulate", "--delta-e", "1"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    // stability bound: gamma * dE^2 * dt = 2 * 100 * 1e-3 = 0.2
    let (o, _) = simulate(dir.path(), "c.csv", &["--delta-e", "10", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = simulate(dir.path(), "d.csv", &["--delta-e", "1", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = simulate(dir.path(), "e.csv", &["--delta-e", "1", "--alpha", "0.5", "--k", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = simulate(dir.path(), "x.csv", &["--delta-e", "1", "--alpha", "0.4", "--threads", "1"]);
    let (_, b) = simulate(dir.path(), "y.csv", &["--delta-e", "1", "--alpha", "0.4", "--threads", "3"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}
