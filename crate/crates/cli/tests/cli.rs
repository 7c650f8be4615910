use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.json"))
}

fn rnag(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnag"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("rnag runs")
}

fn recover(problem: &Path, extra: &[&str]) -> (Output, TempDir) {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["recover", problem.to_str().unwrap()];
    args.extend_from_slice(extra);
    (rnag(&args, dir.path()), dir)
}

fn report(dir: &TempDir) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap()
}

#[test]
fn recover_writes_report_and_points() {
    let (out, dir) = recover(&fixture("posdim"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("p* = (") && stdout.contains("status: recovered"), "{stdout}");
    let r = report(&dir);
    assert_eq!(r["status"], "recovered");
    assert!(r["distance"].as_f64().unwrap() > 0.0);
    let points = std::fs::read_to_string(dir.path().join("points.csv")).unwrap();
    let mut lines = points.lines();
    assert!(lines.next().unwrap().starts_with("phase,index,status,labels"));
    assert!(lines.any(|l| l.starts_with("p_star,")));
}

#[test]
fn malformed_input_exits_1() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"broken\", \"system\": ").unwrap();
    let (out, _) = recover(&bad, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let text = std::fs::read_to_string(fixture("posdim")).unwrap().replace("p1*x2 + p2", "p1*x2 + p3");
    let unknown = tmp.path().join("unknown.json");
    std::fs::write(&unknown, text).unwrap();
    assert_eq!(recover(&unknown, &[]).0.status.code(), Some(1));

    let (out, _) = recover(&tmp.path().join("missing.json"), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unrecovered_exits_2() {
    let tmp = TempDir::new().unwrap();
    let mut p: Value = serde_json::from_str(&std::fs::read_to_string(fixture("posdim")).unwrap()).unwrap();
    p["options"] = serde_json::json!({"descent": {"max_steps": 1}});
    let path = tmp.path().join("starved.json");
    std::fs::write(&path, p.to_string()).unwrap();
    let (out, dir) = recover(&path, &["--attempts", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&dir);
    assert_eq!(r["status"], "failed");
    assert!(r["last_t"].is_number());
}

#[test]
fn reports_are_reproducible() {
    for name in ["multiplicity_line", "infinity_example"] {
        let (a, da) = recover(&fixture(name), &["--seed", "5"]);
        let (b, db) = recover(&fixture(name), &["--seed", "5"]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
        for file in ["report.json", "points.csv"] {
            let x = std::fs::read(da.path().join(file)).unwrap();
            let y = std::fs::read(db.path().join(file)).unwrap();
            assert!(x == y, "{name}: {file} differs between runs");
        }
    }
}

#[test]
fn flags_override_the_file() {
    let (out, dir) = recover(&fixture("posdim"), &["--seed", "11", "--tol-residual", "1e-5", "--attempts", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&dir);
    assert_eq!(r["options"]["seed"], 11);
    assert_eq!(r["options"]["tol_residual"], 1e-5);
    assert_eq!(r["options"]["attempts"], 3);
}

#[test]
fn detect_only_on_six_r() {
    let (out, dir) = recover(&fixture("sixR"), &["--detect-only"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&dir);
    assert_eq!(r["status"], "detected");
    assert_eq!(r["detection"]["endpoints"], 64);
    let labels = &r["detection"]["label_counts"];
    assert_eq!(labels["near_infinity0"], 16);
    assert_eq!(labels["near_infinity1"], 16);
}

#[test]
fn study_writes_table_and_histograms() {
    let dir = TempDir::new().unwrap();
    let p = fixture("posdim");
    let out = rnag(&["study", p.to_str().unwrap(), "--samples", "40", "--sigma", "0.1", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 41);
    assert_eq!(lines[0], "sample,status,p_hat1,p_hat2,p_star1,p_star2,distance,chi2stat,intrinsic");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 9));
    let hist: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("hist.json")).unwrap()).unwrap();
    assert_eq!(hist["samples"], 40);
    assert_eq!(hist["histograms"].as_array().unwrap().len(), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("recovered"));
}

#[test]
fn study_needs_a_nominal_point() {
    let dir = TempDir::new().unwrap();
    let p = fixture("double_root");
    let out = rnag(&["study", p.to_str().unwrap(), "--samples", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
