use std::path::Path;
use std::process::{Command, Output};

fn lvbif(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvbif"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# schema=lvbif/1 params={"));
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn eigen_table_matches_bessel_and_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let o = lvbif(&["eigen"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(d.path().join("eigen.csv")).unwrap();
    let t = rows(&d.path().join("eigen.csv"));
    assert_eq!(
        t.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["0", "1", "2", "3", "4"]
    );
    for r in &t[1..] {
        let rel: f64 = r[5].parse().unwrap();
        assert!(rel < 1e-6, "row {r:?}");
    }
    assert!(lvbif(&["eigen"], d.path()).status.success());
    assert_eq!(first, std::fs::read(d.path().join("eigen.csv")).unwrap());
}

#[test]
fn invalid_parameters_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(
        d.path(),
        r#"{"params":{"mu":1,"sigma":0.5,"alpha":2,"gamma":1,"dim":2}}"#,
    );
    let o = lvbif(&["eigen", "--config", &cfg], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma >= mu"));

    let cfg = config(d.path(), r#"{"gird": 64}"#);
    assert_eq!(
        lvbif(&["eigen", "--config", &cfg], d.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lvbif(&["eigen", "--grid", "4"], d.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lvbif(&["branch", "--beta-max", "1.5"], d.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn flags_override_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), r#"{"grid": 4}"#);
    let o = lvbif(
        &["eigen", "--config", &cfg, "--grid", "64", "--modes", "2"],
        d.path(),
    );
    assert!(o.status.success());
    assert_eq!(rows(&d.path().join("eigen.csv")).len(), 3);
}

#[test]
fn points_tables() {
    let d = tempfile::tempdir().unwrap();
    assert!(lvbif(&["points", "--grid", "256"], d.path())
        .status
        .success());
    let t = rows(&d.path().join("points.csv"));
    assert_eq!(t.len(), 1);
    assert_eq!((t[0][7].as_str(), t[0][8].as_str()), ("-1", "1"));

    let cfg = config(
        d.path(),
        r#"{"params":{"mu":64,"sigma":64,"alpha":2,"gamma":1,"dim":2},"modes":1}"#,
    );
    assert!(
        lvbif(&["points", "--config", &cfg, "--grid", "256"], d.path())
            .status
            .success()
    );
    let t = rows(&d.path().join("points.csv"));
    assert_eq!(t.len(), 2);
    let b: Vec<f64> = t.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(b[0] < b[1]);

    let cfg = config(
        d.path(),
        r#"{"params":{"mu":10,"sigma":10,"alpha":2,"gamma":1,"dim":2}}"#,
    );
    let o = lvbif(
        &["points", "--config", &cfg, "--grid", "128", "--json"],
        d.path(),
    );
    assert!(o.status.success());
    assert!(rows(&d.path().join("points.csv")).is_empty());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["k"], 0);
    assert!(v["note"].is_string());
}

#[test]
fn branch_limit_report_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let e = tempfile::tempdir().unwrap();
    let o = lvbif(
        &["branch", "--grid", "128", "--workers", "2", "--json"],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for dir in v["manifest"]["directions"].as_array().unwrap() {
        assert_eq!(dir["termination"]["reason"], "beta_ceiling");
    }
    for name in ["branch_1_plus.csv", "branch_1_minus.csv"] {
        for r in rows(&d.path().join(name)) {
            assert_eq!(r[4], "1");
            assert!(r[2].parse::<f64>().unwrap() < 1.0 && r[3].parse::<f64>().unwrap() < 1.0);
        }
    }
    // same bytes with a single worker
    assert!(
        lvbif(&["branch", "--grid", "128", "--workers", "1"], e.path())
            .status
            .success()
    );
    for name in ["branch_1_plus_states.csv", "branch_1.json"] {
        assert_eq!(
            std::fs::read(d.path().join(name)).unwrap(),
            std::fs::read(e.path().join(name)).unwrap()
        );
    }

    let o = lvbif(&["limit", "--grid", "128", "--json"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for p in v["summary"]["profiles"].as_array().unwrap() {
        assert_eq!(p["roots"].as_array().unwrap().len(), 1);
    }
    for dir in v["summary"]["directions"].as_array().unwrap() {
        assert_eq!(dir["tail_decreasing"], true);
        assert!(dir["overlap_ratio"].as_f64().unwrap() < 0.1);
    }

    assert!(lvbif(&["report"], d.path()).status.success());
    let t = rows(&d.path().join("diagram.csv"));
    assert!(t.len() > 10 && t.iter().all(|r| r[0] == "1"));
}

#[test]
fn limit_without_branch_data_fails() {
    let d = tempfile::tempdir().unwrap();
    let o = lvbif(&["limit", "--grid", "64"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("branch_1_plus_states.csv"));
    assert_eq!(lvbif(&["report"], d.path()).status.code(), Some(2));
}

#[test]
fn verify_small_sweep() {
    let d = tempfile::tempdir().unwrap();
    let o = lvbif(
        &["verify", "--draws", "20", "--seed", "7", "--json"],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["theorem_violations"], 0);
    for (_, s) in v["inequalities"].as_object().unwrap() {
        assert!(s["worst_margin"].is_number());
    }
    let doc = std::fs::read_to_string(d.path().join("verify.json")).unwrap();
    assert!(doc.contains("\"schema\": \"lvbif/1\""));
}
