use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use plasma_shock_cli::output::{Table, PROFILE_COLUMNS};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &str, out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_plasma-shock"))
        .args(args)
        .arg("--config")
        .arg(configs().join(config))
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into(), String::from_utf8_lossy(&o.stderr).into())
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn restpoints_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["restpoints"], "gas_mach2.toml", dir.path());
    assert_eq!(code, 0);
    let table = Table::read(&dir.path().join("restpoints.csv")).unwrap();
    assert_eq!(table.rows.len(), 2);

    let (code, _, _) = run(&["restpoints"], "sonic.toml", dir.path());
    assert_eq!(code, 3);
    assert_eq!(Table::read(&dir.path().join("restpoints.csv")).unwrap().rows.len(), 1);

    let (code, _, err) = run(&["restpoints"], "invalid_kappa.toml", dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("kappa"), "{err}");
}

#[test]
fn missing_config_and_bad_override_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_plasma-shock")).arg("profile").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let (code, _, err) = run(&["profile", "--tol-override", "solver.bogus=1"], "gas_mach2.toml", dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn profile_table_has_fixed_columns_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["profile", "--threads", "2"], "species_mach2.toml", dir.path());
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), PROFILE_COLUMNS.join(","));
    let table = Table::parse(&text).unwrap();
    assert_eq!(table.render(), text);
    assert!(table.rows.iter().flatten().all(|v| v.is_finite()));
    let (t, te, ti) = (table.column("T").unwrap(), table.column("T_e").unwrap(), table.column("T_i").unwrap());
    for k in 0..t.len() {
        assert!((0.5 * (te[k] + ti[k]) - t[k]).abs() <= 1e-12 * t[k]);
    }
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["residuals"]["pass"], true);
}

#[test]
fn expansion_pair_reports_no_connection() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["profile"], "burgers_expansion.toml", dir.path());
    assert_eq!(code, 4);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["status"], "no_connection");
}

#[test]
fn zero_strength_gives_constant_table() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["profile", "--tol-override", "burgers.u_right=1.0"], "burgers.toml", dir.path());
    assert_eq!(code, 0, "{err}");
    let table = Table::read(&dir.path().join("profile.csv")).unwrap();
    assert!(table.column("u").unwrap().iter().all(|&u| u == 1.0));
}

#[test]
fn sweeps_report_verdicts_and_breaks() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["sweep"], "burgers_sweep.toml", dir.path());
    assert_eq!(code, 0);
    assert!(out.starts_with("germain-stable"), "{out}");
    let table = Table::read(&dir.path().join("sweep.csv")).unwrap();
    let (t, rel) = (table.column("multiplier").unwrap(), table.column("relative_width").unwrap());
    for k in 0..t.len() {
        assert!((rel[k] / t[k] - 1.0).abs() <= 0.1);
    }

    let (code, out, _) = run(&["sweep"], "sweep_break.toml", dir.path());
    assert_eq!(code, 2);
    assert!(out.starts_with("break at multiplier"), "{out}");
    let table = Table::read(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.column("broken").unwrap(), vec![0.0, 0.0, 1.0]);

    let (code, _, err) = run(&["sweep"], "gas_mach2.toml", dir.path());
    assert_eq!(code, 1, "{err}");
}

#[test]
fn parameter_sweep_continues_in_viscosity() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--tol-override", "sweep.kind=\"parameter\"", "--tol-override", "sweep.parameter=\"eta\"", "--tol-override", "sweep.values=[1.0, 1.5, 2.0]"];
    let (code, out, err) = run(&args, "gas_mach2.toml", dir.path());
    assert_eq!(code, 0, "{out} {err}");
    let widths = Table::read(&dir.path().join("sweep.csv")).unwrap().column("width").unwrap();
    assert!(widths.windows(2).all(|w| w[1] > w[0]), "{widths:?}");
}

#[test]
fn check_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run(&["check", "--seed", "7"], "mhd_b1_mach2.toml", dir.path());
    assert_eq!(code, 0, "{out} {err}");
    let report = json(&dir.path().join("check.json"));
    assert_eq!(report["pass"], true);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["jacobian", "conservation", "galilean_axial", "galilean_transverse", "joule_identity", "field_identity_order"] {
        assert!(names.contains(&n), "{names:?}");
    }
}
