use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn flab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flab"))
        .args(args)
        .current_dir(dir)
        .env("FLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{"s": 1.0, "t": 1.0, "k1": 6, "preset": "concentric", "seed": 3}"#;

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn gen_is_byte_identical_on_rerun() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), SMALL);
    for out in ["a", "b"] {
        let o = flab(&["gen", "--config", &cfg, "--out", out], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = read_dir_sorted(&tmp.path().join("a"));
    let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["V.csv", "angles.csv", "cloud.csv", "summary.json"]);
    assert_eq!(a, read_dir_sorted(&tmp.path().join("b")));
}

#[test]
fn seed_flag_changes_angles_not_circles() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), SMALL);
    for (out, seed) in [("a", "1"), ("b", "2")] {
        assert!(flab(&["gen", "--config", &cfg, "--seed", seed, "--out", out], tmp.path()).status.success());
    }
    let read = |d: &str, f: &str| fs::read_to_string(tmp.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "V.csv"), read("b", "V.csv"));
    assert_ne!(read("a", "angles.csv"), read("b", "angles.csv"));
}

#[test]
fn malformed_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "{\"s\": 1.0,");
    assert_eq!(flab(&["gen", "--config", &cfg, "--out", "o"], tmp.path()).status.code(), Some(2));
    let cfg = config(tmp.path(), r#"{"s": 1.0, "t": 1.0, "k1": 6, "preset": "spiral", "seed": 3}"#);
    assert_eq!(flab(&["gen", "--config", &cfg, "--out", "o"], tmp.path()).status.code(), Some(2));
    assert_eq!(flab(&["gen", "--bogus"], tmp.path()).status.code(), Some(2));
}

#[test]
fn coarse_delta_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"s": 1.0, "t": 1.0, "k1": 3, "preset": "concentric", "seed": 3}"#);
    let o = flab(&["gen", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta too coarse"));
}

#[test]
fn missing_files_exit_4() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(flab(&["gen", "--config", "nope.json", "--out", "o"], tmp.path()).status.code(), Some(4));
    let cfg = config(tmp.path(), SMALL);
    let o = flab(&["boxdim", "--config", &cfg, "--input", "nope.csv", "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn boxdim_on_generated_cloud() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), SMALL);
    assert!(flab(&["gen", "--config", &cfg, "--out", "g"], tmp.path()).status.success());
    let o = flab(&["boxdim", "--config", &cfg, "--input", "g/cloud.csv", "--out", "b"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(tmp.path().join("b/boxcounts.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "k,N");
    assert_eq!(rows.len(), 1 + 5);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("b/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], "flab.run/1");
    assert!(summary["boxdim"]["slope"].is_number() && summary["boxdim"]["bound"].is_number());
}

#[test]
fn boxdim_on_empty_cloud_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), SMALL);
    fs::write(tmp.path().join("empty.csv"), "2,6\n").unwrap();
    let o = flab(&["boxdim", "--config", &cfg, "--input", "empty.csv", "--out", "b"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn lemma3c_reports_no_violations() {
    let tmp = TempDir::new().unwrap();
    let o = flab(&["lemma3c", "--trials", "20", "--seed", "5", "--out", "l"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("l/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], "flab.run/1");
    assert_eq!(summary["lemma3c"]["violations"], 0);
    assert_eq!(summary["lemma3c"]["trials"], 20);
}

#[test]
fn triples_and_multiplicity_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"s_prime": 0.9, "t_prime": 0.9, "generator": {"s": 1.0, "t": 1.0, "k1": 6, "preset": "concentric", "seed": 3}}"#,
    );
    let o = flab(&["triples", "--config", &cfg, "--out", "t"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let arcs = fs::read_to_string(tmp.path().join("t/arcs.csv")).unwrap();
    assert!(arcs.lines().count() > 1);
    let o = flab(&["multiplicity", "--config", &cfg, "--out", "m"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["multiplicity.csv", "low_multiplicity.csv", "summary.json"] {
        assert!(tmp.path().join("m").join(f).exists(), "{f}");
    }
}

#[test]
fn report_writes_everything() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"s_prime": 0.9, "t_prime": 0.9, "generator": {"s": 1.0, "t": 1.0, "k1": 6, "preset": "concentric", "seed": 3}}"#,
    );
    let o = flab(&["report", "--config", &cfg, "--out", "r"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let timings: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r/timings.json")).unwrap()).unwrap();
    assert!(timings.as_object().is_some_and(|t| !t.is_empty()));
    for f in ["cloud.csv", "boxcounts.csv", "arcs.csv", "multiplicity.csv", "summary.json"] {
        assert!(tmp.path().join("r").join(f).exists(), "{f}");
    }
}
