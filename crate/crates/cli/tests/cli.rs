use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qgres_core::fixtures;

fn qgres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgres")).args(args).output().expect("run qgres")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column(csv: &str, i: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn two_cycle_eigenvalues() {
    let csv = stdout(&qgres(&["eigs", "--fixture", "fig2", "--window", "1,10"]));
    assert!(csv.starts_with("lambda,multiplicity\n"));
    let values = column(&csv, 0);
    assert_eq!(values.len(), 3);
    for (v, k) in values.iter().zip(1..) {
        assert!((v - k as f64 * PI).abs() < 1e-10);
    }
}

#[test]
fn half_line_has_no_spectral_points() {
    assert_eq!(stdout(&qgres(&["eigs", "--fixture", "halfline"])), "lambda,multiplicity\n");
    assert_eq!(
        stdout(&qgres(&["resonances", "--fixture", "halfline"])),
        "re_lambda,im_lambda,multiplicity,kind\n"
    );
}

#[test]
fn perturbed_two_cycle_resonance() {
    let csv = stdout(&qgres(&["resonances", "--fixture", "fig2", "--family", "b", "--t", "0.05", "--window", "2.5,4,-1,0.5"]));
    let (re, im) = (column(&csv, 0), column(&csv, 1));
    assert_eq!(re.len(), 1);
    assert!((re[0] - (PI + 0.05 * PI / 2.0)).abs() < 5e-3 && im[0] < 0.0);
}

#[test]
fn graph_file_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    fs::write(&path, serde_json::to_string(&fixtures::example2().to_raw()).unwrap()).unwrap();
    let from_file = stdout(&qgres(&["eigs", "--graph", path.to_str().unwrap(), "--window", "1,7"]));
    assert_eq!(from_file, stdout(&qgres(&["eigs", "--fixture", "example2", "--window", "1,7"])));
}

#[test]
fn perturbation_file_matches_family() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    fs::write(&path, r#"{"mode":"length","entries":{"e3":[1.0,-1.0],"e4":[1.0]}}"#).unwrap();
    let args = ["fgr", "--fixture", "fig2", "--lambda", "3.14"];
    let from_file = stdout(&qgres(&[&args[..], &["--perturbation", path.to_str().unwrap()]].concat()));
    assert_eq!(from_file, stdout(&qgres(&[&args[..], &["--family", "b"]].concat())));
}

#[test]
fn uniform_shrink_has_no_decay() {
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&qgres(&["fgr", "--fixture", "fig2", "--family", "a", "--lambda", "3.14"]))).unwrap();
    assert!(json["im_lambda_ddot"].as_f64().unwrap().abs() < 1e-8);
    assert!((json["lambda_dot"].as_f64().unwrap() - PI).abs() < 1e-10);
    assert_eq!(json["F"][0].as_array().unwrap().len(), 2);

    let csv = stdout(&qgres(&["track", "--fixture", "fig2", "--family", "a", "--lambda", "3.14", "--tmax", "0.2", "--steps", "8"]));
    assert!(csv.starts_with("t,re_lambda,im_lambda,re_model,im_model,residual\n"));
    for (t, re) in column(&csv, 0).iter().zip(column(&csv, 1)) {
        assert!((re - PI / (1.0 - t)).abs() < 1e-9);
    }
}

#[test]
fn output_is_deterministic_and_written_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let status = qgres(&["track", "--fixture", "fig2", "--family", "d", "--lambda", "3.14", "--tmax", "0.04", "--steps", "4", "--out", out.to_str().unwrap()]);
        assert!(status.status.success());
        assert!(status.stdout.is_empty());
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    let first = run("one");
    assert_eq!(first, run("two"));
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 6);
    // curved trajectory: decay grows with t
    let im = column(&text, 2);
    assert!(im.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn quasimode_report_fields() {
    let json: serde_json::Value = serde_json::from_str(&stdout(&qgres(&[
        "quasimode", "--fixture", "fig2", "--family", "b", "--lambda", "3.14", "--t", "1e-3",
    ])))
    .unwrap();
    let r = &json[0];
    for key in ["lambda0", "t", "epsilon", "gamma", "distance", "holds", "C_observed"] {
        assert!(!r[key].is_null(), "missing {key}");
    }
    assert_eq!(r["holds"], true);
}

fn exit_code(args: &[&str]) -> i32 {
    qgres(args).status.code().unwrap()
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"vertices":["a"],"edges":[{"id":"e","ends":["a","a"],"length":1.0}]}"#).unwrap();
    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{").unwrap();
    let pert = dir.path().join("p.json");
    fs::write(&pert, r#"{"mode":"a","entries":{"nope":[0.0,1.0]}}"#).unwrap();
    assert_eq!(exit_code(&["eigs", "--fixture", "cycle:1"]), 2);
    assert_eq!(exit_code(&["eigs", "--graph", bad.to_str().unwrap()]), 2);
    assert_eq!(exit_code(&["eigs", "--graph", garbage.to_str().unwrap()]), 2);
    assert_eq!(exit_code(&["eigs", "--graph", dir.path().join("missing.json").to_str().unwrap()]), 2);
    assert_eq!(exit_code(&["eigs", "--fixture", "fig2", "--window", "-1,1,-1,1"]), 2);
    assert_eq!(exit_code(&["eigs", "--fixture", "fig2", "--window", "1,2,3"]), 2);
    assert_eq!(exit_code(&["fgr", "--fixture", "fig2", "--perturbation", pert.to_str().unwrap(), "--lambda", "3.14"]), 2);
    assert_eq!(exit_code(&["track", "--fixture", "fig2", "--family", "b", "--lambda", "3.14", "--steps", "3"]), 2);
    assert_eq!(exit_code(&["quasimode", "--fixture", "fig2", "--family", "b", "--lambda", "3.14", "--gamma", "1.5"]), 2);
    assert_eq!(exit_code(&["frobnicate"]), 2);
}

#[test]
fn solver_failures_exit_3_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(exit_code(&["fgr", "--fixture", "fig2", "--family", "b", "--lambda", "2.0", "--out", out.to_str().unwrap()]), 3);
    assert!(!Path::new(&out.join("fgr.json")).exists());
    // 2π is a double eigenvalue of the five-edge graph
    assert_eq!(exit_code(&["fgr", "--fixture", "example2", "--family", "a", "--lambda", "6.2832"]), 3);
}
