use std::path::Path;
use std::process::{Command, Output};

fn slipcell(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slipcell"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_writes_json_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipcell(
        &[
            "solve",
            "--pattern",
            "disk:0.2",
            "--n",
            "32",
            "--out",
            "v.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("v.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["header"]["tool"], "slipcell");
    assert_eq!(doc["header"]["config_hash"].as_str().unwrap().len(), 64);
    let v = &doc["data"]["v"];
    let (v11, v22) = (v[0][0].as_f64().unwrap(), v[1][1].as_f64().unwrap());
    assert!(v11 > 0.0 && ((v11 - v22) / v11).abs() < 1e-8);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--family",
        "square",
        "--phis",
        "0.1:0.3:3",
        "--n",
        "32",
    ];
    let a = slipcell(&args, dir.path());
    let b = slipcell(&args, dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# slipcell "));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3);
    let v11: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(v11.windows(2).all(|w| w[1] < w[0]), "{v11:?}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--pattern", "disk:0.2", "--n", "100"],
        vec!["solve", "--pattern", "disk:0.6"],
        vec!["solve", "--pattern", "blob:1"],
        vec!["sweep", "--family", "disk", "--phis", "0.1:1.2:3"],
        vec!["solve", "--pattern", "disk:0.2", "--top", "lid"],
        vec!["solve", "--pattern", "disk:0.2", "--refine", "64,128"],
        vec!["frobnicate"],
    ] {
        let o = slipcell(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("error"), "{args:?}");
    }
}

#[test]
fn numerical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipcell(
        &[
            "solve",
            "--pattern",
            "disk:0.3",
            "--n",
            "64",
            "--max-iter",
            "2",
            "--raw",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("converge"));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "# grid\nn = 32\n\ntol = fast\n").unwrap();
    std::fs::write(dir.path().join("unknown.cfg"), "n = 32\nwidth = 3\n").unwrap();
    std::fs::write(dir.path().join("syntax.cfg"), "n 32\n").unwrap();
    for (file, needle) in [
        ("bad.cfg", "bad.cfg:4"),
        ("unknown.cfg", "unknown.cfg:2"),
        ("syntax.cfg", "syntax.cfg:1"),
    ] {
        let o = slipcell(
            &["solve", "--pattern", "disk:0.2", "--config", file],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    }
}

#[test]
fn explicit_options_override_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "n = 16\nmax_iter = 4000\nraw = true\n",
    )
    .unwrap();
    let o = slipcell(
        &[
            "solve",
            "--config",
            "run.cfg",
            "--pattern",
            "square:0.4",
            "--n",
            "32",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["data"]["n"], 32);
    let o = slipcell(
        &["solve", "--config", "run.cfg", "--pattern", "square:0.4"],
        dir.path(),
    );
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["data"]["n"], 16);
}

#[test]
fn riblet_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipcell(&["riblet", "--phis", "0.3,0.6", "--n", "512"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for r in data_rows(&String::from_utf8(o.stdout).unwrap()) {
        let x: Vec<f64> = r.iter().map(|c| c.parse().unwrap()).collect();
        let phi = x[0];
        let exact = -(std::f64::consts::FRAC_PI_2 * phi).sin().ln() / std::f64::consts::PI;
        assert!((x[1] / exact - 1.0).abs() < 1e-14);
        assert!((x[2] / (exact / 2.0) - 1.0).abs() < 1e-14);
        assert!((x[3] / exact - 1.0).abs() < 0.02, "{x:?}");
        assert!((x[4] / x[2] - 1.0).abs() < 0.02, "{x:?}");
    }
}

#[test]
fn profile_navier_and_limits() {
    let dir = tempfile::tempdir().unwrap();
    let read = |law: &str| -> Vec<Vec<f64>> {
        let o = slipcell(&["profile", "--law", law, "--points", "11"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        data_rows(&String::from_utf8(o.stdout).unwrap())
            .iter()
            .map(|r| r.iter().map(|c| c.parse().unwrap()).collect())
            .collect()
    };
    let d = read("dirichlet");
    assert!(d[0][1].abs() < 1e-15);
    assert!((d[5][1] - 0.25).abs() < 1e-14);
    let p = read("perfect");
    assert!((p[0][1] - 1.0).abs() < 1e-14);
    let n = read("navier:2,0,1");
    assert!((n[0][1] - 1.0 / 3.0).abs() < 1e-14);
    let bad = slipcell(&["profile", "--law", "navier:1,2"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn drag_of_small_disk() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipcell(
        &[
            "drag",
            "--pattern",
            "disk:0.25",
            "--periods",
            "2,3,4",
            "--n",
            "128",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let f11 = doc["data"]["f"][0][0].as_f64().unwrap();
    assert!((f11 / 0.25 / (32.0 / 3.0) - 1.0).abs() < 0.1, "{f11}");
}

#[test]
fn validate_quick_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = slipcell(&["validate", "--quick", "--out", "art"], dir.path());
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert_eq!(summary.lines().filter(|l| l.starts_with("AC")).count(), 14);
    assert!(summary.contains("AC14 PASS determinism"));
    for name in [
        "riblets.csv",
        "fit.json",
        "drag.json",
        "criteria.txt",
        "poincare.csv",
    ] {
        assert!(dir.path().join("art").join(name).exists(), "{name}");
    }
}
