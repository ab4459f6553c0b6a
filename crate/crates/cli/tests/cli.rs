use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gspt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gspt"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn gspt")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const MINIMAL: &str = "eps = 0.01\n[model]\nname = \"minimal\"\n";

#[test]
fn list_models_prints_six_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gspt(&["list-models", "--out", "o", "--quiet"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(tmp.path().join("o/models.csv")).unwrap();
    let names: Vec<String> = r.records().map(|rec| rec.unwrap()[0].to_string()).collect();
    assert_eq!(
        names,
        ["minimal", "ebers_moll", "stickslip_exp", "stickslip_poly", "vdp", "transition"]
    );
}

#[test]
fn analyze_minimal_reports_one_jump_off_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.toml", MINIMAL);
    let out = gspt(&["analyze", "--config", &cfg, "--out", "o", "--quiet"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(tmp.path().join("o/contact_points.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let x: f64 = rows[0][0].parse().unwrap();
    let y: f64 = rows[0][1].parse().unwrap();
    assert!((x - 1.0).abs() < 1e-8 && y.abs() < 1e-8, "({x}, {y})");
    assert_eq!(&rows[0][2], "1");
    assert_eq!(&rows[0][3], "true");
    assert_eq!(&rows[0][4], "off");
    let svg = fs::read_to_string(tmp.path().join("o/phase_portrait.svg")).unwrap();
    assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn unknown_config_key_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "[model]\nname = \"minimal\"\ncolour = 2\n");
    let out = gspt(&["analyze", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn unknown_model_and_missing_config_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "u.toml", "[model]\nname = \"nope\"\n");
    let out = gspt(&["cycle", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = gspt(&["cycle", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_parameter_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        "[model]\nname = \"stickslip_poly\"\nparams = { v0 = -1.0 }\n",
    );
    let out = gspt(&["analyze", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.toml", MINIMAL);
    for dir in ["a", "b"] {
        let out = gspt(&["simulate", "--config", &cfg, "--out", dir, "--quiet"], tmp.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["limit_cycle.csv", "limit_cycle_summary.csv", "trajectory.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn eps_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.toml", MINIMAL);
    let out = gspt(
        &["simulate", "--config", &cfg, "--out", "o", "--eps", "0.005", "--quiet"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(tmp.path().join("o/limit_cycle_summary.csv")).unwrap();
    let eps: f64 = r.records().next().unwrap().unwrap()[1].parse().unwrap();
    assert_eq!(eps, 0.005);
}

#[test]
fn riccati_writes_samples_and_matches_prediction() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "r.toml", "[riccati]\na0 = 1.0\nb1 = 1.0\nd0 = 1.0\npoints = 101\n");
    let out = gspt(&["riccati", "--config", &cfg, "--out", "o", "--quiet"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(tmp.path().join("o/zeta.csv")).unwrap();
    assert_eq!(r.records().count(), 101);
    let mut r = csv::Reader::from_path(tmp.path().join("o/riccati_summary.csv")).unwrap();
    let kv: std::collections::BTreeMap<String, f64> = r
        .records()
        .map(|x| {
            let x = x.unwrap();
            (x[0].to_string(), x[1].parse().unwrap())
        })
        .collect();
    let rel = (kv["right_constant_fitted"] / kv["right_constant_predicted"] - 1.0).abs();
    assert!(rel < 1e-4, "relative gap {rel}");
}
