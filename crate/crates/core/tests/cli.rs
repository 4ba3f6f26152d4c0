use std::path::Path;
use std::process::{Command, Output};

fn wdipln(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdipln"))
        .args(args)
        .env("WDIPLN_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn help_documents_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["sweep", "addsub", "gates", "scaling", "eval", "rerun"] {
        let o = wdipln(&[sub, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{sub}");
        let text = String::from_utf8_lossy(&o.stdout);
        for flag in ["--out", "--seed", "--format", "--noise-preset"] {
            assert!(text.contains(flag), "{sub} help lacks {flag}");
        }
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wdipln(&["scaling", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(wdipln(&["scaling", "--variant", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(wdipln(&["gates"], dir.path()).status.code(), Some(1));
}

#[test]
fn malformed_netlist_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"fanout_n\": 1,\n \"branches\": [{\"devices\": [{\"kind\": \"ring\", \"r\": \"x\"}]}]}").unwrap();
    let o = wdipln(&["sweep", "--netlist", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("branches[0].devices[0]") && err.contains("line 2"), "{err}");
}

#[test]
fn empty_netlist_sweeps_flat() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("empty.json");
    std::fs::write(&net, r#"{"fanout_n": 1, "branches": [{"devices": []}]}"#).unwrap();
    let o = wdipln(&["sweep", "--netlist", net.to_str().unwrap(), "--step-pm", "100"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("wavelength_nm,transmission_db,phase_rad"));
    assert!(lines.all(|l| l.split(',').nth(1) == Some("0")));
    assert!(dir.path().join("sweep.manifest.json").exists());
}

#[test]
fn bundled_panel_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdipln(&["sweep", "--netlist", &fixture("addsub_i.json"), "--name", "panel_i"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("panel_i.csv")).unwrap();
    let trace: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(wdipln::circuit::find_dips(&trace, 1.0).len(), 1);
}

#[test]
fn addsub_writes_twelve_panels() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdipln(&["addsub", "--step-pm", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for label in wdipln::circuit::ADDSUB_PANELS {
        assert!(dir.path().join(format!("addsub_{label}.csv")).exists(), "{label}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("addsub_summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 12);
}

#[test]
fn scaling_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdipln(&["scaling", "--variant", "wdipln-nominal", "-N", "8", "-M", "8"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("elements   72") && text.contains("8.64e-2") && text.contains("I/O  288"), "{text}");
    let o = wdipln(&["scaling", "--variant", "coln", "-N", "8", "-M", "1"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("elements   16") && text.contains("12.8") && text.contains("I/O   64"), "{text}");
    let o = wdipln(&["scaling", "-N", "1", "-M", "1", "--format", "json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scaling.json")).unwrap()).unwrap();
    assert!(reports.as_array().unwrap().iter().all(|r| r["element_count"] == 2));
}

#[test]
fn pad_capacity_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdipln(
        &["scaling", "--variant", "wdipln-nominal", "-N", "8", "-M", "8", "--pad-grid", "10x10"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gates_with_and_without_noise() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdipln(&["gates", "--gate", "xor"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gates_xor.json")).unwrap()).unwrap();
    assert_eq!(log["accuracy"], 1.0);
    let csv = std::fs::read_to_string(dir.path().join("gates_xor.csv")).unwrap();
    assert!(csv.starts_with("input_pair,raw_readout,activated,target,correct\n00,"));

    let o = wdipln(&["gates", "--gate", "or", "--noise-preset", "hardware"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gates_or.json")).unwrap()).unwrap();
    assert!(log["accuracy"].as_f64().unwrap() <= 1.0);
    assert_eq!(log["stages"].as_array().unwrap().len(), 3);
}

#[test]
fn training_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = wdipln(&["gates", "--gate", "xor", "--epochs", "0", "--max-restarts", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn eval_reports_readout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"weights": [0.5, -0.25, 0.75], "inputs": [1, 1, 0.5]}"#).unwrap();
    let o = wdipln(&["eval", "--config", cfg.to_str().unwrap(), "--format", "json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    let got = r["signed_readout"].as_f64().unwrap();
    assert!((got - 0.625 / 3.0).abs() < 1e-3, "{got}");

    std::fs::write(&cfg, r#"{"weights": [1.5], "inputs": [1]}"#).unwrap();
    assert_eq!(wdipln(&["eval", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}
