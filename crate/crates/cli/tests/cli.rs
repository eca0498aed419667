use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

fn cansys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cansys"))
        .args(args)
        .output()
        .expect("run cansys")
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write_model(name: &str, json: &str) -> String {
    let p = tmp(name);
    std::fs::write(&p, json).unwrap();
    p.display().to_string()
}

fn rows(out: &Output) -> Vec<Vec<f64>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn kappa_on_identity() {
    let out = cansys(&[
        "kappa",
        "--example",
        "identity",
        "--rmin",
        "10",
        "--rmax",
        "100",
        "--per-decade",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("r,kappa,lower,upper\n"));
    let r = rows(&out);
    assert_eq!((r[0][0], r[0][1]), (10.0, 10.0));
    assert_eq!((r[1][0], r[1][1]), (100.0, 100.0));
}

#[test]
fn kernel_on_identity() {
    let out = cansys(&[
        "kernel",
        "--example",
        "identity",
        "--rmin",
        "10",
        "--rmax",
        "1000",
        "--per-decade",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    for row in rows(&out) {
        assert!((row[1] - (row[0] - 0.5)).abs() < 1e-6 * row[0]);
        assert!((row[3] - 1.0 / row[0]).abs() < 1e-12);
    }
}

#[test]
fn kernel_below_threshold_is_an_input_error() {
    let out = cansys(&["kernel", "--example", "identity", "--rmin", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eigs_on_identity_with_summary() {
    let summary = tmp("identity_summary.json");
    let out = cansys(&[
        "eigs",
        "--example",
        "identity",
        "--rmax",
        "20",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let lambdas: Vec<f64> = rows(&out).iter().map(|r| r[1]).collect();
    let expect = [
        -5.5, -4.5, -3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5, 4.5, 5.5,
    ];
    assert_eq!(lambdas.len(), expect.len());
    for (l, e) in lambdas.iter().zip(expect) {
        assert!((l - e * PI).abs() < 1e-10);
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert!((json["hs_sum"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(json["trace_inverse"].as_f64().unwrap(), 0.0);
}

#[test]
fn eigs_on_diagonal_has_zero_trace() {
    let m = write_model(
        "diag.json",
        r#"{"kind":"diagonal","a":1,"b":3,"h1":1,"h2":{"coef":1,"exponent":-2}}"#,
    );
    let summary = tmp("diag_summary.json");
    let out = cansys(&[
        "eigs",
        "--model",
        &m,
        "--rmax",
        "5",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(json["trace_inverse"].as_f64().unwrap(), 0.0);
}

#[test]
fn model_errors_exit_with_two() {
    let indefinite = write_model(
        "indef.json",
        r#"{"kind":"piecewise","breakpoints":[0,1],"values":[[1,0,0]]}"#,
    );
    assert_eq!(
        cansys(&["kappa", "--model", &indefinite]).status.code(),
        Some(2)
    );
    let lp = write_model("lp.json", r#"{"kind":"diagonal","a":1,"h1":1,"h2":1}"#);
    let out = cansys(&["eigs", "--model", &lp, "--cutoff", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit circle"));
    assert_eq!(
        cansys(&["kappa", "--example", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(cansys(&["kappa"]).status.code(), Some(2));
}

#[test]
fn verify_passes_on_identity_and_fails_on_a_corrupted_copy() {
    let ok = cansys(&["verify", "--example", "identity"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["pass"], true);
    let bad = write_model(
        "bad.json",
        r#"{"kind":"piecewise","breakpoints":[0,1],"values":[[2,0,1]]}"#,
    );
    let out = cansys(&["verify", "--model", &bad, "--as", "identity"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn csv_output_is_byte_identical() {
    let (a, b) = (tmp("run_a.csv"), tmp("run_b.csv"));
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let out = cansys(&[
            "kappa",
            "--example",
            "chirp(1,1)",
            "--rmax",
            "1000",
            "--threads",
            threads,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn angle_file_matches_named_example() {
    let m = write_model(
        "chirp.json",
        r#"{"kind":"angle","a":0,"b":1,"phi":{"family":"chirp","gamma":0,"beta":2}}"#,
    );
    let args = ["--rmin", "100", "--rmax", "1000", "--per-decade", "2"];
    let from_file = cansys(&[&["kappa", "--model", &m][..], &args].concat());
    let named = cansys(&[&["kappa", "--example", "chirp(0,2)"][..], &args].concat());
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, named.stdout);
}
