use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use stringclass::suite::EQUATION_REGISTRY;

fn stringclass(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stringclass"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("STRINGCLASS_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    stringclass(args).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn invalid_settings_are_usage_errors() {
    for args in [
        &["--ntheta", "15"][..],
        &["--ntheta", "abc"],
        &["--fd-step", "0.5"],
        &["--tol", "0"],
        &["--scenario", "nope"],
        &["--group", "su4"],
        &["--grids", "64,30,17"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn report_schema_and_registry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let st = run(&["--scenario", "central-extension", "--ntheta", "32", "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0));
    let v = read_json(&out);
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["checks", "config", "convergence", "version"]);
    let rows = v["checks"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let keys: Vec<_> = row.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["name", "paper_ref", "pass", "residual", "seconds", "tol"]);
        assert!(EQUATION_REGISTRY.contains(&row["paper_ref"].as_str().unwrap()));
        assert!(row["residual"].as_f64().unwrap() <= row["tol"].as_f64().unwrap());
    }
    let names: Vec<_> = rows.iter().map(|r| r["name"].as_str().unwrap().to_string()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(v["config"]["ntheta"], 32);
}

#[test]
fn identical_configs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let st = run(&[
            "--scenario",
            "trivial-bundle",
            "--ntheta",
            "32",
            "--seed",
            "5",
            "--omit-timing",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(st.status.code(), Some(0));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // only the echoed output path differs
    let strip = |t: Vec<u8>| {
        String::from_utf8(t).unwrap().lines().filter(|l| !l.contains("\"out\"")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(ta), strip(tb));
    let other = dir.path().join("c.json");
    run(&[
        "--scenario",
        "trivial-bundle",
        "--ntheta",
        "32",
        "--seed",
        "6",
        "--omit-timing",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_ne!(read_json(&a)["checks"], read_json(&other)["checks"]);
}

#[test]
fn failing_check_exits_one_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let st =
        run(&["--scenario", "central-extension", "--ntheta", "32", "--tol", "1e-20", "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(1));
    let v = read_json(&out);
    assert!(v["checks"].as_array().unwrap().iter().any(|r| r["pass"] == false));
    assert!(v["checks"].as_array().unwrap().iter().all(|r| r["tol"].as_f64().unwrap() == 1e-20));
}

#[test]
fn io_failures_have_their_own_status() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("r.json");
    let st = run(&["--scenario", "central-extension", "--ntheta", "32", "--out", bad.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(3));
    let st = run(&["--config", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(3));
}

#[test]
fn flags_override_environment_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"scenario": "central-extension", "ntheta": 20, "seed": 3, "report": "csv"}"#).unwrap();
    let out = dir.path().join("r.json");
    let st = stringclass(&[
        "--config",
        cfg.to_str().unwrap(),
        "--ntheta",
        "32",
        "--report",
        "json",
        "--out",
        out.to_str().unwrap(),
    ])
    .env("STRINGCLASS_SEED", "9")
    .env("STRINGCLASS_NTHETA", "24")
    .output()
    .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let v = read_json(&out);
    assert_eq!(v["config"]["scenario"], "central-extension");
    assert_eq!(v["config"]["ntheta"], 32);
    assert_eq!(v["config"]["seed"], 9);
    // malformed config is a usage error
    fs::write(&cfg, r#"{"ntheat": 32}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn csv_report() {
    let out = run(&["--scenario", "central-extension", "--ntheta", "32", "--report", "csv", "--omit-timing"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "kind,name,paper_ref,grid,residual,tol,pass,seconds");
    assert_eq!(lines.filter(|l| l.starts_with("check,")).count(), 4);
}

#[test]
fn path_fibration_at_256() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let st =
        run(&["--scenario", "path-fibration", "--group", "su2", "--ntheta", "256", "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0));
    let v = read_json(&out);
    let row =
        v["checks"].as_array().unwrap().iter().find(|r| r["name"] == "path.string_form_vs_omega3").cloned().unwrap();
    assert!(row["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn convergence_columns_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let st = run(&["--scenario", "all", "--grids", "32,64,128", "--omit-timing", "--out", out.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let v = read_json(&out);
    let mut cols: BTreeMap<String, Vec<(u64, f64)>> = BTreeMap::new();
    for r in v["convergence"].as_array().unwrap() {
        cols.entry(r["name"].as_str().unwrap().into())
            .or_default()
            .push((r["grid"].as_u64().unwrap(), r["residual"].as_f64().unwrap()));
    }
    assert_eq!(cols.len(), v["checks"].as_array().unwrap().len());
    for (name, col) in cols {
        assert_eq!(col.iter().map(|c| c.0).collect::<Vec<_>>(), [32, 64, 128]);
        for w in col.windows(2) {
            // residuals at round-off level may jitter
            assert!(w[1].1 <= w[0].1 || w[1].1 < 1e-9, "{name}: {col:?}");
        }
    }
    let stderr = String::from_utf8_lossy(&st.stderr);
    let orders: Vec<f64> = stderr
        .lines()
        .filter(|l| l.starts_with("order"))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert!(!orders.is_empty());
    assert!(orders.iter().all(|&p| p >= 1.8), "{orders:?}");
}
