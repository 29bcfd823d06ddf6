// SPDX-License-Identifier: Apache-2.0

//! Drives the `rtqec` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn rtqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtqec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rtqec(args);
    assert!(
        out.status.success(),
        "rtqec {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut all = args.to_vec();
    all.push("--json");
    serde_json::from_str(&ok(&all)).expect("stdout is JSON")
}

fn fails(args: &[&str]) -> String {
    let out = rtqec(args);
    assert!(!out.status.success(), "rtqec {args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn budget_defaults_and_overrides() {
    let v = json(&["budget"]);
    assert_eq!(v["decoder_subtotal_ns"], 148);
    assert_eq!(v["electronics_subtotal_ns"], 180);
    assert_eq!(v["total_ns"], 550);
    assert_eq!(v["feasibility"]["feasible"], true);
    let v = json(&["budget", "--delay", "500"]);
    assert_eq!(v["feasibility"]["feasible"], false);
    let v = json(&["budget", "--nn-core-ns", "200"]);
    assert_eq!(v["decoder_subtotal_ns"], 224);
    assert_eq!(v["total_ns"], 626);
    assert!(ok(&["budget", "--delay", "549"]).contains("INFEASIBLE"));
    let v = json(&["budget", "--qec-cycle-ns", "150"]);
    assert_eq!(v["throughput"]["backlog_per_round_ns"], 34);
}

#[test]
fn scale_table_rows() {
    let csv = ok(&["scale", "--format", "csv"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[1], "3,4,32,4736,399,3.2,124");
    let v = json(&["scale", "--distances", "3"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["rows"][0]["p_lstm"], 4736);
    assert_eq!(v["capacity"]["single_decoder"], 15);
    assert!(fails(&["scale", "--distances", "4"]).contains("not an odd integer"));
    assert!(ok(&["scale", "--format", "markdown"]).contains("| 13 | 84 | 139 |"));
}

#[test]
fn simulate_writes_dataset_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.qecds");
    let df = dir.path().join("d.qecdf");
    let v = json(&[
        "simulate", "--rounds", "20", "--shots", "2000", "--seed", "1", "-o", p(&ds), "--defects", p(&df),
        "--inject", "D2:X:40deg:each-round",
    ]);
    assert_eq!(v["seed"], 1);
    let bytes = std::fs::read(&ds).unwrap();
    assert_eq!(&bytes[..6], b"QECDS1");
    assert_eq!(&std::fs::read(&df).unwrap()[..6], b"QECDF1");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.qecds.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["injections"][0], "D2:X:40deg:each-round");
    assert_eq!(manifest["versions"]["dataset_format"], "QECDS1");
}

#[test]
fn simulate_rejects_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.qecds");
    let err = fails(&["simulate", "--basis", "Z", "--inject", "D9:Z:30deg", "-o", p(&ds)]);
    assert!(err.contains("cannot flip the Z-basis logical"), "{err}");
    assert!(fails(&["simulate", "--inject", "A3:X:30deg", "-o", p(&ds)]).contains("A3"));
    assert!(fails(&["simulate", "--distance", "4", "-o", p(&ds)]).contains("distance"));
    assert!(fails(&["simulate", "--rounds", "5", "--inject", "D2:X:30:round-9", "-o", p(&ds)]).contains("round 9"));
    assert!(fails(&["simulate", "--rounds", "0", "-o", p(&ds)]).contains("rounds"));
}

#[test]
fn noiseless_evaluation_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let noise = dir.path().join("noise.json");
    std::fs::write(&noise, r#"{"p1": 0, "p2": 0, "p_idle": 0, "p_meas": 0}"#).unwrap();
    let v = json(&[
        "evaluate", "--rounds", "4", "--shots", "200", "--seed", "2", "--noise-file", p(&noise), "--decoder", "mwpm",
        "--feedback-period", "0,1",
    ]);
    for s in v["series"].as_array().unwrap() {
        for pt in s["points"].as_array().unwrap() {
            assert_eq!(pt["fidelity"], 1.0);
        }
    }
    let ds = dir.path().join("q.qecds");
    ok(&["simulate", "--rounds", "5", "--shots", "300", "--noise-file", p(&noise), "-o", p(&ds), "--seed", "4"]);
    let v = json(&["evaluate", "--dataset", p(&ds), "--decoder", "mwpm"]);
    assert_eq!(v["series"][0]["points"][0]["fidelity"], 1.0);
}

#[test]
fn nn_needs_weights_and_compares_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(&["evaluate", "--rounds", "2", "--shots", "10", "--decoder", "nn"]);
    assert!(err.contains("--weights-x"), "{err}");
    let wx = dir.path().join("x.qecnw");
    let wz = dir.path().join("z.qecnw");
    let v = json(&["weights-init", "--kind", "X", "--zeros", "-o", p(&wx)]);
    assert_eq!(v["parameters"], 4736 + 33);
    ok(&["weights-init", "--kind", "Z", "--seed", "9", "-o", p(&wz)]);
    assert_eq!(&std::fs::read(&wz).unwrap()[..6], b"QECNW1");
    // Swapped files are caught by the type tag.
    let err = fails(&[
        "evaluate", "--rounds", "2", "--shots", "10", "--decoder", "nn", "--weights-x", p(&wz), "--weights-z", p(&wx),
    ]);
    assert!(err.contains("type"), "{err}");
    let out = ok(&[
        "evaluate", "--rounds", "3", "--shots", "200", "--seed", "1", "--decoder", "nn,mwpm", "--weights-x", p(&wx),
        "--weights-z", p(&wz),
    ]);
    assert!(out.contains("nn m=0") && out.contains("mwpm m=0"), "{out}");
}

#[test]
fn outputs_do_not_depend_on_workers_and_manifest_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    for w in ["1", "8"] {
        ok(&["simulate", "--workers", w, "--rounds", "6", "--shots", "3000", "--seed", "11", "-o", p(&d(&format!("{w}.qecds")))]);
        ok(&[
            "evaluate", "--workers", w, "--rounds", "4", "--shots", "1500", "--seed", "11", "--feedback-period", "2",
            "--csv", p(&d(&format!("{w}.csv"))),
        ]);
    }
    assert_eq!(std::fs::read(d("1.qecds")).unwrap(), std::fs::read(d("8.qecds")).unwrap());
    assert_eq!(std::fs::read(d("1.csv")).unwrap(), std::fs::read(d("8.csv")).unwrap());

    // No --seed: one is drawn, recorded, and a rerun reproduces the CSV.
    let csv = d("auto.csv");
    ok(&["evaluate", "--rounds", "3", "--shots", "800", "--decoder", "none,mwpm", "--csv", p(&csv), "--svg", p(&d("auto.svg"))]);
    let first = std::fs::read(&csv).unwrap();
    let manifest = d("auto.csv.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert!(m["seed"].is_u64());
    std::fs::remove_file(&csv).unwrap();
    ok(&["rerun", p(&manifest)]);
    assert_eq!(std::fs::read(&csv).unwrap(), first);
    let svg = std::fs::read_to_string(d("auto.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn every_command_speaks_json() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.qecnw");
    for args in [
        vec!["budget"],
        vec!["scale"],
        vec!["weights-init", "--kind", "Z", "--zeros", "-o", p(&w)],
        vec!["evaluate", "--rounds", "2", "--shots", "50", "--seed", "1"],
    ] {
        let v = json(&args);
        assert!(v["command"].is_string(), "{args:?}");
    }
}
