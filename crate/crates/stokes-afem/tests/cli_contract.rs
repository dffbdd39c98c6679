//! Black-box contract tests for the command-line binary: exit codes, CSV
//! schema, config precedence, and reproducibility of the non-timing columns.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-afem"))
}

fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary failed to start")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Strip the three trailing timing columns from each CSV row.
fn without_timings(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[..fields.len() - 3].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn uniform_square_three_levels() {
    let out = run_bin(&["run", "--domain", "square", "--mode", "uniform", "--levels", "3"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,cells,n_u,n_p,lambda1,eta,marked,sqrt_err,t_solve,t_estimate,t_refine"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn bad_theta_exits_2_and_names_the_flag() {
    let out = run_bin(&["run", "--theta", "1.5", "--domain", "square"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--theta"), "stderr: {err}");
}

#[test]
fn unknown_domain_exits_2() {
    let out = run_bin(&["run", "--domain", "pentagon"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--domain"));
}

#[test]
fn csv_reproducible_outside_timing_columns() {
    let args = [
        "run", "--domain", "lshape", "--mode", "adaptive", "--max-dofs", "2000",
    ];
    let a = run_bin(&args);
    let b = run_bin(&args);
    assert!(a.status.success() && b.status.success());
    assert_eq!(without_timings(&stdout(&a)), without_timings(&stdout(&b)));
}

#[test]
fn config_file_applies_and_flags_win() {
    let dir = std::env::temp_dir().join("stokes_afem_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"domain":"square","mode":"uniform","levels":2}"#).unwrap();
    let out = run_bin(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 3); // header + 2 levels
    let out = run_bin(&["run", "--config", cfg.to_str().unwrap(), "--levels", "3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn dump_mesh_roundtrips() {
    let out = run_bin(&["dump-mesh", "--domain", "slit", "--levels", "1"]);
    assert!(out.status.success());
    let mesh = stokes_afem::mesh::mesh_from_json(&stdout(&out)).expect("parse dumped mesh");
    assert!(stokes_afem::mesh::check_conformity(&mesh).is_empty());
    assert!((mesh.total_area() - 4.0).abs() < 1e-12);
}

#[test]
fn diagnose_unknown_check_exits_2() {
    let out = run_bin(&["diagnose", "--domain", "square", "--check", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_output_directory() {
    let dir = std::env::temp_dir().join("stokes_afem_out_test");
    let _ = std::fs::remove_dir_all(&dir);
    let out = run_bin(&[
        "run", "--domain", "square", "--mode", "uniform", "--levels", "2",
        "--out", dir.to_str().unwrap(), "--dump-mesh", "--dump-matrices",
    ]);
    assert!(out.status.success());
    for f in ["run.csv", "run.json", "mesh_final.json", "A.mtx", "B.mtx", "M.mtx"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    assert!(json["diagnostics"]["reference_lambda"].is_f64());
    assert_eq!(json["records"].as_array().unwrap().len(), 2);
}
