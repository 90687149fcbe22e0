//! End-to-end runs of the `upccd` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn upccd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upccd")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture() -> String {
    format!("{}/tests/fixtures/h4_chain_2.5A_sto3g.fcidump", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn pccd_then_export_from_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = upccd(&["pccd", "--hubbard", "L=4,t=1,U=2", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let report = json(&dir.path().join("pccd.json"));
    assert_eq!(report["norb"], 4);
    assert_eq!(report["npairs"], 2);
    assert!(report["energy"].as_f64().unwrap() < 0.0);
    assert_eq!(report["survivors"], 4);

    let amps = dir.path().join("amplitudes.txt");
    assert!(fs::read_to_string(&amps).unwrap().starts_with("# norb=4 npairs=2"));
    let export = dir.path().join("export");
    let run = upccd(&[
        "export-qasm",
        "--amplitudes",
        amps.to_str().unwrap(),
        "--threshold",
        "1e-3",
        "--out",
        export.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let qasm = fs::read_to_string(export.join("circuit.qasm")).unwrap();
    assert!(qasm.starts_with("OPENQASM 2.0;"));
    assert!(qasm.contains("qreg q[8];"));
}

#[test]
fn prepare_reports_fidelities() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = upccd(&["prepare", "--fcidump", &fixture(), "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let f = json(&dir.path().join("fidelity.json"));
    assert!((f["exact_energy"].as_f64().unwrap() - -1.872215994424114).abs() < 1e-8);
    assert!((f["hf_vs_exact"].as_f64().unwrap() - 0.5737543705).abs() < 1e-8);
    assert!(f["upccd_vs_exact"].as_f64().unwrap() > f["hf_vs_exact"].as_f64().unwrap());
    assert!(dir.path().join("circuit.qasm").exists());
    assert!(dir.path().join("state.json").exists());
}

#[test]
fn qpe_contrast_on_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = upccd(&[
        "qpe",
        "--fcidump",
        &fixture(),
        "--oo",
        "--exact",
        "--ancillas",
        "8",
        "--iqpe-bits",
        "6",
        "--out",
        out,
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let q = json(&dir.path().join("qpe.json"));
    assert!(q["ground_bin_mass_ratio"].as_f64().unwrap() > 2.0, "{q}");
    let hist = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("bin_index,phase,energy,count"));
    let conv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(conv.lines().any(|l| l.starts_with("iterative,")));
}

#[test]
fn scan_over_interaction_strengths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = upccd(&["scan", "--hubbard", "L=4,t=1,U=1", "--u-values", "1,4", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("parameter,pccd_energy,exact_energy,upccd_fidelity,hf_fidelity"));
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("4,"));
}

#[test]
fn errors_are_json_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run = upccd(&["pccd", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(err["kind"], "input");

    let bad = dir.path().join("bad.fcidump");
    fs::write(&bad, "&FCI NELEC=2 &END\n1.0 1 1 0 0\n").unwrap();
    let run = upccd(&["pccd", "--fcidump", bad.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(err["kind"], "parse");

    assert_eq!(upccd(&["--help"]).status.code(), Some(0));
}
