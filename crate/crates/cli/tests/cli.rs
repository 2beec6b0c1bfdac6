use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn ball_spectrum_rows() {
    let out = stdout(&run(&["ball-spectrum", "--dim", "2", "--tau", "1", "--count", "5"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "j,eigenvalue,order");
    assert_eq!(lines[1], "1,0.000000000000e+00,0");
    assert_eq!(lines[2], "2,1.000000000000e+00,1");
    assert_eq!(lines[3], "3,1.000000000000e+00,1");
    assert!(lines[4].starts_with("4,") && lines[4].ends_with(",2"));
    assert_eq!(lines.len(), 6);
}

#[test]
fn solve_unit_disk_json() {
    let disk = data("unit_disk.json");
    let out = stdout(&run(&[
        "solve",
        "--domain",
        disk.to_str().unwrap(),
        "--tau",
        "1",
        "--count",
        "6",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let eig: Vec<f64> = v["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(eig.len(), 6);
    assert!(eig[0].abs() < 1e-10);
    assert!((eig[1] - 1.0).abs() < 1e-10 && (eig[2] - 1.0).abs() < 1e-10);
    assert_eq!(v["clusters"][1], serde_json::json!([2, 3]));
    assert_eq!(v["k_max"], 10);
    assert_eq!(v["domain"]["a0"].as_f64(), Some(1.0));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let domain = data("cos3_0.1.json");
    let args = [
        "solve",
        "--domain",
        domain.to_str().unwrap(),
        "--tau",
        "2",
        "--count",
        "10",
    ];
    let a = bin().args(args).env("STEKLOV_THREADS", "1").output().unwrap();
    let b = bin().args(args).env("STEKLOV_THREADS", "4").output().unwrap();
    assert_eq!(stdout(&a), stdout(&b));
    let scan = [
        "iso-scan",
        "--family",
        "perturbed_disk",
        "--params",
        "0,0.05,0.1",
        "--tau",
        "1",
    ];
    let a = bin().args(scan).env("STEKLOV_THREADS", "1").output().unwrap();
    let b = bin().args(scan).env("STEKLOV_THREADS", "3").output().unwrap();
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn default_iso_scan_passes() {
    let out = stdout(&run(&["iso-scan"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "family,parameter,area,tau,lambda2,ball_bound,margin,verdict");
    // two families of at least six members at three tensions, plus the summary
    assert!(lines.len() >= 38);
    assert!(lines[1..lines.len() - 1].iter().all(|l| l.ends_with(",PASS")));
    assert_eq!(*lines.last().unwrap(), "all,,,,,,,PASS");
}

#[test]
fn shape_derivative_with_fd_validation() {
    let domain = data("cos2_0.05.json");
    let out = stdout(&run(&[
        "shape-derivative",
        "--domain",
        domain.to_str().unwrap(),
        "--tau",
        "1",
        "--F",
        "2",
        "--s",
        "1",
        "--field",
        "cos2",
        "--validate-fd",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["F"], serde_json::json!([2]));
    assert!(v["fd_rel_error"].as_f64().unwrap() < 1e-3);
    assert_eq!(v["fd_steps"].as_array().unwrap().len(), 3);
    assert!(v["hadamard"].as_f64().unwrap() < 0.0);
}

#[test]
fn criticality_on_the_disk() {
    let disk = data("unit_disk.json");
    let out = stdout(&run(&[
        "criticality",
        "--domain",
        disk.to_str().unwrap(),
        "--tau",
        "1",
        "--F",
        "AUTO",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["F"], serde_json::json!([2, 3]));
    assert!(v["residual"].as_f64().unwrap() < 1e-7);
}

#[test]
fn concentration_csv_columns() {
    let out = stdout(&run(&[
        "concentration",
        "--tau",
        "1",
        "--eps",
        "0.2,0.1",
        "--modes",
        "2",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "eps,j,lambda_eps,lambda_limit,abs_error,rate");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("2.000000000000e-01,2,") && lines[2].ends_with(','));
    assert!(!lines[4].ends_with(','));
}

#[test]
fn inverse_sum_on_the_disk_is_tight() {
    let disk = data("unit_disk.json");
    let out = stdout(&run(&["inverse-sum", "--domain", disk.to_str().unwrap(), "--tau", "1"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["gap"].as_f64().unwrap().abs() < 1e-8);
    assert!((v["lhs"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert_eq!(v["weighted"].as_array().unwrap().len(), 3);
}

#[test]
fn run_config_resolves_paths_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("unit_disk.json"), dir.path().join("disk.json")).unwrap();
    let config = dir.path().join("solve.json");
    std::fs::write(
        &config,
        r#"{"command": "solve", "domain": "disk.json", "tau": 2, "count": 3,
            "output": {"format": "csv", "path": "out.csv"}}"#,
    )
    .unwrap();
    let out = run(&["run-config", config.to_str().unwrap()]);
    assert!(stdout(&out).is_empty());
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains("2,2.000000000000e+00,2;3"));

    let json_path = dir.path().join("out.json");
    let out = run(&[
        "run-config",
        config.to_str().unwrap(),
        "--format",
        "json",
        "--output",
        json_path.to_str().unwrap(),
    ]);
    assert!(stdout(&out).is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(json_path).unwrap()).unwrap();
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 3);
}

#[test]
fn shipped_configs_parse_and_run() {
    for name in [
        "configs/solve_inline.json",
        "configs/concentration.json",
        "configs/shape_derivative.json",
        "configs/iso_scan.json",
    ] {
        let out = run(&["run-config", data(name).to_str().unwrap()]);
        assert!(!stdout(&out).is_empty(), "{name}");
    }
}

#[test]
fn validation_failures_exit_with_two() {
    let disk = data("unit_disk.json");
    let disk = disk.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--domain", "/nonexistent/domain.json", "--tau", "1"],
        vec!["solve", "--domain", disk, "--tau", "-1"],
        vec!["shape-derivative", "--domain", disk, "--tau", "1", "--field", "cos2x"],
        vec![
            "shape-derivative",
            "--domain",
            disk,
            "--tau",
            "1",
            "--F",
            "2",
            "--field",
            "cos2",
        ],
        vec![
            "shape-derivative",
            "--domain",
            disk,
            "--tau",
            "1",
            "--s",
            "3",
            "--field",
            "cos2",
        ],
        vec!["concentration", "--tau", "1", "--eps", "0.1,0.2", "--modes", "2"],
        vec![
            "iso-scan",
            "--family",
            "perturbed_disk",
            "--params",
            "0.7",
            "--tau",
            "1",
        ],
        vec!["inverse-sum", "--domain", disk, "--tau", "1", "--weights", "t^0.5"],
        vec!["ball-spectrum", "--dim", "1", "--tau", "1", "--count", "3"],
        vec!["no-such-command"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn config_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        "{\n  \"command\": \"concentration\",\n  \"tau\": 1,\n  \"eps\": [0.1],\n  \"modes\": 2,\n  \"mesh\": 3\n}\n",
    )
    .unwrap();
    let out = run(&["run-config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6") && err.contains("mesh"), "{err}");

    std::fs::write(
        &config,
        r#"{"command": "solve", "domain": {"a0": 1, "radius": 2}, "tau": 1}"#,
    )
    .unwrap();
    let out = run(&["run-config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("domain") && err.contains("radius"), "{err}");
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = bin()
        .args(["ball-spectrum", "--dim", "2", "--tau", "1", "--count", "2"])
        .env("STEKLOV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emitted_domain_reparses_as_a_domain_file() {
    let domain = data("cos2_0.1.json");
    let first = stdout(&run(&[
        "solve",
        "--domain",
        domain.to_str().unwrap(),
        "--tau",
        "1",
        "--count",
        "5",
    ]));
    let v: Value = serde_json::from_str(&first).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("domain.json");
    std::fs::write(&copy, serde_json::to_string(&v["domain"]).unwrap()).unwrap();
    let second = stdout(&run(&[
        "solve",
        "--domain",
        copy.to_str().unwrap(),
        "--tau",
        "1",
        "--count",
        "5",
    ]));
    let w: Value = serde_json::from_str(&second).unwrap();
    assert_eq!(v["eigenvalues"], w["eigenvalues"]);
}
