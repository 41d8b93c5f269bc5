use std::path::Path;
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hausdorff-grid"))
        .env_remove("HAUSDORFF_GRID_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn help_matches_golden() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/help.txt")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["sweep-h", "--h-list", "0.1,0.2,0.05"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"parameters": {"hh": 1}}"#);
    assert_eq!(run(&["--config", &bad, "compute"]).status.code(), Some(2));
    let wrong_op = write(
        dir.path(),
        "op.json",
        r#"{"operation": "bounds", "scene": {"identical": {"ball": {"center": [0, 0], "radius": 1}}},
            "grid": {"dim": 2, "origin": [-2, -2], "h": 0.5, "counts": [9, 9]}}"#,
    );
    assert_eq!(run(&["--config", &wrong_op, "compute"]).status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["--config", missing.to_str().unwrap(), "compute"]).status.code(), Some(2));
}

#[test]
fn identical_sets_give_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "id.json",
        r#"{"scene": {"identical": {"difference": [{"box": {"min": [-1, -1], "max": [1, 1]}},
                                                  {"ball": {"center": [0.3, 0], "radius": 0.4}}]}},
            "grid": {"dim": 2, "origin": [-2, -2], "h": 0.1, "counts": [41, 41]}}"#,
    );
    let o = run(&["--config", &cfg, "--format", "json", "compute", "--source", "fmm"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["d_tilde"].as_f64(), Some(0.0));
    assert_eq!(v["ties"].as_u64(), Some(41 * 41));
}

#[test]
fn constants_match_closed_forms() {
    let o = run(&["constants", "--starts", "8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let closed = [2.0 / 3.0, 2.0 / 3.0 * (5.0 - 7f64.sqrt()).sqrt(), 2.0 / 3.0 * (8.0 - 19f64.sqrt()).sqrt()];
    assert_eq!(values.len(), 3);
    for (v, c) in values.iter().zip(closed) {
        assert_abs_diff_eq!(*v, c, epsilon = 1e-9);
    }
}

#[test]
fn sweep_respects_bounds() {
    let o = run(&["sweep-h", "--dim", "2", "--displacement", "3,0", "--h-list", "0.2,0.1,0.05"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let f = |name: &str| r[col(name)].parse::<f64>().unwrap();
        // inner circle at |p| = 3 in a cavity of radius 8: d_H = 9 - 3
        assert_abs_diff_eq!(f("d_exact"), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f("delta"), f("d_exact") - f("d_tilde"), epsilon = 1e-12);
        assert!(f("delta") >= 0.0 && f("delta") <= f("bound"));
        assert!(f("bound") <= 2f64.sqrt() * f("h"));
    }
}

#[test]
fn sequence_analysis_json_fields() {
    let o = run(&["--format", "json", "sequence-analysis", "--x0", "0.1", "--k", "0.4142135623730951", "--n", "50"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let eps = v["epsilon"].as_f64().unwrap();
    assert!(eps > 0.0 && eps <= 1.0 / 50.0);
    assert!(v["m"].as_f64().unwrap() <= 2.0 / (eps * eps));
    assert_eq!(v["N"].as_u64(), Some(50));
}

#[test]
fn output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "2", "1"] {
        let p = dir.path().join(format!("r{}.csv", outs.len()));
        let o = run(&[
            "--seed", "11", "--threads", threads, "--out", p.to_str().unwrap(),
            "randomized", "--dim", "2", "--runs", "6", "--h-list", "0.2,0.1,0.05",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(std::fs::read(&p).unwrap());
    }
    assert!(!outs[0].is_empty());
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}
