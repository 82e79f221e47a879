use std::path::Path;
use std::process::{Command, Output};

fn biphoton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(args)
        .output()
        .unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap()
}

#[test]
fn hom_json_carries_closed_form() {
    let out = biphoton(&["hom", "--beta-s", "1e-25", "--grid-n", "128", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let numeric = v["fwhm_s"].as_f64().unwrap();
    let closed = v["params"]["closed_form"]["fwhm_s"].as_f64().unwrap();
    assert!((numeric / closed - 1.0).abs() < 1e-3);
    assert_eq!(v["mode"], "local");
    assert!((v["params"]["config"]["beta_s"].as_f64().unwrap() / 1e-25 - 1.0).abs() < 1e-12);
}

#[test]
fn nonlocal_csv_to_stdout() {
    let out = biphoton(&["nonlocal", "--beta-s", "1e-25", "--beta-i", "-1e-25", "--grid-n", "128"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau_s,rate"));
    assert_eq!(lines.count(), 401);
}

#[test]
fn out_dir_gets_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = biphoton(&["schmidt", "--grid-n", "64", "--out", d]);
    assert!(out.status.success());
    assert!(Path::new(d).join("schmidt.csv").exists());
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("schmidt.json")).unwrap()).unwrap();
    let k = v["summary"]["schmidt_number"].as_f64().unwrap();
    let analytic = v["analytic_schmidt_number"].as_f64().unwrap();
    assert!((k / analytic - 1.0).abs() < 1e-3, "{k} vs {analytic}");
}

#[test]
fn jsa_magnitude_matrix() {
    let out = biphoton(&["jsa", "--magnitude", "--grid-n", "32", "--pump-nm", "700"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 33);
    assert!(text.lines().all(|l| l.split(',').count() == 33));
}

#[test]
fn sweep_is_deterministic_and_sized() {
    let args = [
        "sweep",
        "--start-nm",
        "700",
        "--stop-nm",
        "720",
        "--step-nm",
        "5",
        "--grid-n",
        "64",
    ];
    let a = biphoton(&args);
    let b = biphoton(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 6);
}

#[test]
fn sweep_arm_comparison() {
    let out = biphoton(&[
        "sweep",
        "--mode",
        "nonlocal",
        "--compare-arms",
        "--start-nm",
        "650",
        "--stop-nm",
        "810",
        "--step-nm",
        "80",
        "--analytic-schmidt",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("pump_wavelength_m,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"pump": {"wavelength_nm": 650, "fwhm_nm": 1}, "grid": {"n": 64}}"#,
    )
    .unwrap();
    let out = biphoton(&[
        "hom",
        "--config",
        cfg.to_str().unwrap(),
        "--pump-nm",
        "700",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pump = &v["params"]["config"]["pump"];
    assert!((pump["wavelength"].as_f64().unwrap() - 700e-9).abs() < 1e-18);
    assert!((pump["bandwidth"].as_f64().unwrap() - 1e-9).abs() < 1e-18);
    assert_eq!(v["params"]["config"]["grid_n"], 64);
}

#[test]
fn figure_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["figure", "fig3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.path().join("fig3.csv").exists() && dir.path().join("fig3.json").exists());
}

#[test]
fn failures_are_json_on_stderr() {
    let out = biphoton(&["figure", "fig9"]);
    assert!(!out.status.success());
    let e = error_json(&out);
    assert_eq!(e["kind"], "unknown_figure");
    assert!(e["message"].as_str().unwrap().contains("fig7b"));

    let out = biphoton(&["hom", "--length-mm", "-2"]);
    assert!(!out.status.success());
    let e = error_json(&out);
    assert_eq!(e["kind"], "validation");
    assert!(e["message"].as_str().unwrap().contains("crystal.length_mm"));

    let out = biphoton(&["hom", "--pump-nm", "3000"]);
    assert_eq!(error_json(&out)["kind"], "out_of_range");

    let out = biphoton(&["hom", "--config", "/nonexistent/run.json"]);
    assert_eq!(error_json(&out)["kind"], "read");

    // the scan would alias on a coarse grid
    let out = biphoton(&["nonlocal", "--beta-s", "1e-25", "--grid-n", "64"]);
    let e = error_json(&out);
    assert_eq!(e["kind"], "scan_span");
    assert!(e["message"].as_str().unwrap().contains("grid.n"));

    let out = biphoton(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "usage");
}
