use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cv_teleport::io::parse_row;
use cv_teleport::states::{DensityMatrix, StateDocument};

const SMALL: &[&str] = &[
    "--dim",
    "56",
    "--order",
    "64",
    "--wigner-points",
    "11",
    "--surface-points",
    "7",
    "--quadrature-points",
    "101",
];

fn cv_teleport(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cv-teleport")).args(args).env_remove("CV_TELEPORT_THREADS").output().unwrap()
}

fn teleport_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["teleport", "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    cv_teleport(&args)
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn teleport_outputs_are_byte_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(teleport_into(&a, &[]).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_cv-teleport"))
        .args(["teleport", "--out-dir", b.to_str().unwrap()])
        .args(SMALL)
        .env("CV_TELEPORT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let names = listing(&a);
    assert_eq!(names, listing(&b));
    for expected in ["teleport_summary.json", "wigner_input.csv", "wigner_subtracted.json", "surface_tmsv.csv"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name} differs");
    }
}

#[test]
fn teleport_summary_and_density_matrix_are_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(teleport_into(tmp.path(), &["--resource", "subtracted"]).status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("teleport_summary.json")).unwrap()).unwrap();
    let res = &summary["resources"][0];
    assert_eq!(res["resource"], "subtracted");
    let fidelity = res["averaged_fidelity"].as_f64().unwrap();
    assert!(fidelity > 0.7 && fidelity < 0.8, "{fidelity}");

    let doc = StateDocument::from_json(&fs::read_to_string(tmp.path().join("rho_subtracted.json")).unwrap()).unwrap();
    let rho = DensityMatrix::try_from(&doc).unwrap();
    assert!((rho.trace() - res["captured_probability"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn csv_outputs_use_seventeen_significant_digits() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(teleport_into(tmp.path(), &["--resource", "tmsv"]).status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("quadrature_tmsv.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,pr"));
    let first = lines.next().unwrap();
    for field in first.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{field}");
    }
    let rows: Vec<Vec<f64>> = lines.map(|l| parse_row(l).unwrap()).collect();
    assert_eq!(rows.len(), 100);
}

#[test]
fn single_outcome_mode_replaces_averaging() {
    let tmp = tempfile::tempdir().unwrap();
    let out = teleport_into(tmp.path(), &["--outcome", "0.3", "-0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let names = listing(tmp.path());
    assert!(names.contains(&"outcome_tmsv.json".to_string()));
    assert!(names.contains(&"wigner_outcome_subtracted.csv".to_string()));
    assert!(!names.contains(&"teleport_summary.json".to_string()));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("outcome_tmsv.json")).unwrap()).unwrap();
    assert_eq!(v["x0"], 0.3);
    assert_eq!(v["p1"], -0.2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.json");
    fs::write(&config, r#"{"q": 0.5, "n1": 2, "r_values": [0.0, 0.1, 0.2]}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = cv_teleport(&[
        "--config",
        config.to_str().unwrap(),
        "entangle",
        "--n1",
        "0",
        "--n2",
        "0",
        "--dim",
        "48",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("entangle_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["q"], 0.5);
    assert_eq!(summary["n1"], 0);

    let csv = fs::read_to_string(out_dir.join("entanglement.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| parse_row(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let tmsv_entropy = summary["tmsv_entropy_bits"].as_f64().unwrap();
    assert!((rows[0][1] - tmsv_entropy).abs() < 1e-12);
}

#[test]
fn invalid_configuration_exits_with_two() {
    assert_eq!(cv_teleport(&["teleport", "--q", "1.2"]).status.code(), Some(2));
    assert_eq!(cv_teleport(&["entangle", "--r-values", "0.1,1.5"]).status.code(), Some(2));
    assert_eq!(cv_teleport(&["--config", "/nonexistent/cfg.json", "selftest"]).status.code(), Some(2));
    assert_eq!(cv_teleport(&["--threads", "0", "selftest"]).status.code(), Some(2));
}

#[test]
fn narrow_grid_exits_with_convergence_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap();
    let out = cv_teleport(&["teleport", "--bound", "3", "--order", "32", "--resource", "tmsv", "--out-dir", out_dir]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(tmp.path().join("teleport_summary.json").exists());
}

#[test]
fn selftest_passes_by_default_and_fails_when_truncated() {
    let out = cv_teleport(&["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));

    let out = cv_teleport(&["selftest", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL squeezed-vacuum truncation"));

    let out = cv_teleport(&["selftest", "--bound", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL outcome probability normalization"));
}
