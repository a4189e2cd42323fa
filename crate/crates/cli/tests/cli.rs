use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn isotropy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isotropy")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn constant_grid() -> String {
    let mut s = String::from("x,y,value\n");
    for r in 0..8 {
        for c in 0..10 {
            s.push_str(&format!("{c},{r},2.5\n"));
        }
    }
    s
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"], &["study", "--help"]] {
        let out = isotropy(args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "d.csv", &constant_grid());
    assert_eq!(code(&isotropy(&[])), 1);
    assert_eq!(code(&isotropy(&["frobnicate"])), 1);
    assert_eq!(code(&isotropy(&["test", &data, "--method", "kriging"])), 1);
    assert_eq!(code(&isotropy(&["simulate", "--grid", "eighteen"])), 1);
    assert_eq!(code(&isotropy(&["study", "--config", "no-such-table"])), 1);
    assert_eq!(code(&isotropy(&["study", "--config", "gvl-a", "--replicates", "0"])), 1);

    let bad = write(dir.path(), "bad.json", r#"{"method": "gsc-g", "window": "wide"}"#);
    let out = isotropy(&["test", &data, "--config", &bad]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let bad_study = write(dir.path(), "study.json", r#"{"name": "x", "replicates": 5}"#);
    assert_eq!(code(&isotropy(&["study", "--config", &bad_study])), 1);
}

#[test]
fn data_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = isotropy(&["test", missing.to_str().unwrap(), "--method", "ms"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("absent.csv"));

    let malformed = write(dir.path(), "m.csv", "x,y,value\n0,0,1\n1,0,oops\n");
    let out = isotropy(&["test", &malformed, "--method", "gsc-u"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    // scattered points cannot feed a periodogram
    let sim = dir.path().join("u.csv");
    assert_eq!(code(&isotropy(&["simulate", "--uniform", "60", "--out", sim.to_str().unwrap()])), 0);
    assert_eq!(code(&isotropy(&["test", sim.to_str().unwrap(), "--method", "lz"])), 2);
}

#[test]
fn degenerate_fields_exit_three() {
    let dir = TempDir::new().unwrap();
    let data = write(dir.path(), "c.csv", &constant_grid());
    for method in ["gsc-g", "lz"] {
        let out = isotropy(&["test", &data, "--method", method]);
        assert_eq!(code(&out), 3, "{method}: {}", stderr(&out));
    }
}

#[test]
fn simulate_then_test_round_trip() {
    let dir = TempDir::new().unwrap();
    let field = dir.path().join("field.csv");
    let field = field.to_str().unwrap();
    let out = isotropy(&["simulate", "--grid", "18x12", "--xi", "6", "--ratio", "2", "--seed", "11", "--out", field]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(field).unwrap();
    assert!(text.starts_with("x,y,value\n"));
    assert_eq!(text.lines().count(), 1 + 18 * 12);

    // the same seed gives the same field on stdout
    let again = isotropy(&["simulate", "--grid", "18x12", "--xi", "6", "--ratio", "2", "--seed", "11"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);

    for method in ["gsc-g", "gsc-u", "ms", "lz"] {
        let json = dir.path().join(format!("{method}.json"));
        let out = isotropy(&["test", field, "--method", method, "--seed", "4", "--out", json.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{method}: {}", stderr(&out));
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
        let p = v["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p), "{method}: {p}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn test_accepts_a_method_config_file() {
    let dir = TempDir::new().unwrap();
    let field = dir.path().join("f.csv");
    let field = field.to_str().unwrap();
    assert_eq!(code(&isotropy(&["simulate", "--grid", "14x10", "--seed", "2", "--out", field])), 0);
    let cfg = write(
        dir.path(),
        "m.json",
        r#"{"method": "gsc-g", "window": [2.0, 2.0], "pvalue_mode": "asymptotic_chi2"}"#,
    );
    let json = dir.path().join("r.json");
    let out = isotropy(&["test", field, "--config", &cfg, "--out", json.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["pvalue_mode"], "asymptotic_chi2");
}

#[test]
fn study_output_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "3", "3"] {
        let out_dir = dir.path().join(format!("run{}", reports.len()));
        let out = isotropy(&[
            "study", "--config", "gvl-a", "--replicates", "12", "--threads", threads, "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let table = fs::read_to_string(out_dir.join("report.txt")).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), table);
        let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
        assert!(out_dir.join("timings.csv").exists());
        let config = fs::read_to_string(out_dir.join("config.json")).unwrap();
        assert!(config.contains("\"replicates\": 12"));
        reports.push((table, csv));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[1], reports[2]);
}

#[test]
fn print_config_round_trips_through_a_file() {
    let dir = TempDir::new().unwrap();
    let out = isotropy(&["study", "--config", "lagset", "--print-config"]);
    assert_eq!(code(&out), 0);
    let path = write(dir.path(), "lagset.json", &String::from_utf8(out.stdout).unwrap());
    let again = isotropy(&["study", "--config", &path, "--print-config"]);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), String::from_utf8(again.stdout).unwrap());
}

#[test]
fn diagnose_writes_plot_ready_csv() {
    let dir = TempDir::new().unwrap();
    let contours = dir.path().join("c.csv");
    let out = isotropy(&["diagnose", "contours", "--ratio", "2", "--levels", "0.5,0.05", "--out", contours.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&contours).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 360);

    let field = dir.path().join("f.csv");
    assert_eq!(code(&isotropy(&["simulate", "--grid", "12x12", "--out", field.to_str().unwrap()])), 0);
    let out = isotropy(&["diagnose", "directional", field.to_str().unwrap(), "--directions", "4", "--bins", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 5);

    assert_eq!(code(&isotropy(&["diagnose", "contours", "--levels", "1.5"])), 1);
    assert_eq!(code(&isotropy(&["simulate", "--grid", "4x4", "--xi", "-1"])), 1);
}
