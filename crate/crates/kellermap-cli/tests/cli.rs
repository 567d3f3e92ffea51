//! End-to-end tests driving the installed binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kellermap"))
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const TRIANGULAR: &str = "map n=2\nx1 + x2^3\nx2\n";
const SHIFT_MATRIX: &str =
    r#"{"rows":3,"cols":3,"entries":["0","0","0","1","-1","-1","1","1","1"]}"#;

#[test]
fn phi_prints_differences() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "tri.txt", TRIANGULAR);

    let out = bin().args(["phi", "--map"]).arg(&map).args(["--m", "0"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "x1\nx2\n");

    let out = bin().args(["phi", "--map"]).arg(&map).args(["--m", "1"]).output().unwrap();
    assert_eq!(stdout(&out), "-x2^3\n0\n");

    let out = bin().args(["phi", "--map"]).arg(&map).args(["--m", "2"]).output().unwrap();
    assert_eq!(stdout(&out), "0\n0\n");
}

#[test]
fn invert_reports_inverse_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "tri.txt", TRIANGULAR);
    let out = bin().args(["invert", "--map"]).arg(&map).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("vanishing index: 2"), "{text}");
    assert!(text.contains("-x2^3 + x1"), "{text}");
    assert!(text.contains("composition check"), "{text}");

    // Identity map vanishes at the first difference.
    let id = write(dir.path(), "id.txt", "map n=2\nx1\nx2\n");
    let out = bin()
        .args(["invert", "--map"])
        .arg(&id)
        .args(["--format", "json"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["vanishing_index"], 1);
    assert_eq!(v["inverse"][0], "x1");

    // A map without a polynomial inverse is inconclusive: exit code 2.
    let series = write(dir.path(), "series.txt", "map n=2\nx1 + x1^2*x2\nx2\n");
    let out = bin().args(["invert", "--map"]).arg(&series).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["invert", "--map"])
        .arg(&series)
        .args(["--max-m", "3", "--degree-cap", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Wrong linear part is an input error: exit code 1.
    let bad = write(dir.path(), "bad.txt", "map n=2\nx1 + x2\nx2\n");
    let out = bin().args(["invert", "--map"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("identity"), "{}", stderr(&out));
}

#[test]
fn parse_errors_carry_location_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "map n=2\nx1 + * x2\nx2\n");
    let out = bin().args(["invert", "--map"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("position"), "{}", stderr(&out));

    let out = bin()
        .args(["invert", "--map", "/nonexistent/map.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn jacobian_and_compose() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "tri.txt", TRIANGULAR);
    let out = bin()
        .args(["jacobian", "--det", "--map"])
        .arg(&map)
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("[1, 3*x2^2]"), "{text}");
    assert!(text.contains("det = 1"), "{text}");

    let inv = write(dir.path(), "inv.txt", "map n=2\nx1 - x2^3\nx2\n");
    let out = bin()
        .args(["compose", "--f"])
        .arg(&map)
        .arg("--g")
        .arg(&inv)
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "map n=2\nx1\nx2\n");
}

#[test]
fn invariants_bases() {
    let dir = tempfile::tempdir().unwrap();
    let id = write(dir.path(), "id.txt", "map n=2\nx1\nx2\n");
    let out = bin()
        .args(["invariants", "--d", "1", "--map"])
        .arg(&id)
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "x1\nx2\n");

    let tri = write(dir.path(), "tri.txt", TRIANGULAR);
    let out = bin()
        .args(["invariants", "--d", "1", "--nearly", "--map"])
        .arg(&tri)
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "x1"), "{text}");
}

#[test]
fn keller_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = write(dir.path(), "shift.json", SHIFT_MATRIX);

    let out = bin()
        .args(["keller", "classify", "--matrix"])
        .arg(&matrix)
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("case: R2_1_1"), "{text}");

    let out = bin()
        .args(["--format", "json", "keller", "verify", "--matrix"])
        .arg(&matrix)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["case"], "R2_1_1");
    assert_eq!(v["vanishing_index"], 5);
    assert!(v["inverse"].is_array());
    assert_eq!(v["witnesses"]["I0"][0], "x2 - x3");

    let out = bin()
        .args(["keller", "system1", "--matrix"])
        .arg(&matrix)
        .output()
        .unwrap();
    assert!(stdout(&out).contains("unit jacobian: yes"));

    // Zero matrix: degenerate rank-0 verification at index 1.
    let zero = write(
        dir.path(),
        "zero.json",
        r#"{"rows":3,"cols":3,"entries":[0,0,0,0,0,0,0,0,0]}"#,
    );
    let out = bin()
        .args(["keller", "verify", "--matrix"])
        .arg(&zero)
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("case: R1"), "{text}");
    assert!(text.contains("vanishing index: 1"), "{text}");

    // Lowering the order bound below the proven one makes the outcome
    // inconclusive rather than an internal failure.
    let out = bin()
        .args(["keller", "verify", "--max-m", "3", "--matrix"])
        .arg(&matrix)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    // A non-Keller matrix yields an explicit verdict and a nonzero exit.
    let eye = write(
        dir.path(),
        "eye.json",
        r#"{"rows":2,"cols":2,"entries":["1","0","0","1"]}"#,
    );
    let out = bin()
        .args(["keller", "verify", "--matrix"])
        .arg(&eye)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("NOT_KELLER"));
}

#[test]
fn keller_case22_trees() {
    let out = bin().args(["keller", "case22"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("8 leaves: 8 UNSAT, 0 SAT"), "{text}");

    let out = bin()
        .args(["keller", "case22", "--drop-lambda-constraint"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("SAT (witness"));
}

#[test]
fn search_campaign_deterministic_logs() {
    let dir = tempfile::tempdir().unwrap();
    let log_a = dir.path().join("a.jsonl");
    let log_b = dir.path().join("b.jsonl");
    for log in [&log_a, &log_b] {
        let out = bin()
            .args(["search", "--strategy", "rank1", "--count", "10", "--seed", "7", "--out"])
            .arg(log)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).contains("0 anomalies"));
    }
    let strip = |path: &Path| -> Vec<String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v["wall_ms"] = 0.into();
                v.to_string()
            })
            .collect()
    };
    assert_eq!(strip(&log_a), strip(&log_b));

    // Dimension 4 is gated behind --explore.
    let out = bin()
        .args(["search", "--strategy", "triangular", "--count", "1", "--n", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["search", "--strategy", "triangular", "--count", "2", "--n", "4", "--explore"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one() {
    let out = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("Defaults:"));
}
