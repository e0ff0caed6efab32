//! End-to-end tests of the `hks` binary: subcommand behavior, exit codes,
//! determinism, and JSON schema conformance.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hks"))
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let text = fs::read_to_string(root.join(name)).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&value).unwrap()
}

fn assert_valid(schema_file: &str, value: &serde_json::Value) {
    let compiled = schema(schema_file);
    let msgs: Vec<String> = match compiled.validate(value) {
        Ok(()) => Vec::new(),
        Err(errors) => errors
            .map(|e| format!("{e} at {}", e.instance_path))
            .collect(),
    };
    assert!(
        msgs.is_empty(),
        "{schema_file} validation failed: {msgs:?}\n{value:#}"
    );
}

#[test]
fn test_subcommand_known_value_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1\n");
    let b = write(dir.path(), "b.csv", "2\n");
    let json_path = dir.path().join("result.json");
    let out = bin()
        .args(["test", "--x"])
        .arg(&a)
        .arg("--y")
        .arg(&b)
        .args(["--k", "2", "--method", "exact", "--perms", "9", "--seed", "3"])
        .arg("--json")
        .arg(&json_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["statistic"].as_f64().unwrap(), 1.5);
    assert_eq!(v["witness"]["t"].as_f64().unwrap(), 0.0);
    assert_eq!(v["witness"]["side"], "plus");
    assert_valid("test_result.schema.json", &v);
    let from_file: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(from_file, v);
}

#[test]
fn negative_order_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1\n");
    let b = write(dir.path(), "b.csv", "2\n");
    let out = bin()
        .args(["test", "--x"])
        .arg(&a)
        .arg("--y")
        .arg(&b)
        .args(["--k", "-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--k"), "stderr: {err}");
}

#[test]
fn unknown_flag_exits_one() {
    let out = bin().args(["test", "--bogus", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn test_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "0.3\n-1.2\n0.9\n2.2\n");
    let b = write(dir.path(), "b.csv", "0.1\n0.8\n-0.5\n");
    let run = || {
        let out = bin()
            .args(["test", "--x"])
            .arg(&a)
            .arg("--y")
            .arg(&b)
            .args(["--k", "1", "--perms", "999", "--seed", "7"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn labeled_format_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "both.csv", "sample,value\nx,1\ny,2\n");
    let out = bin()
        .args(["test", "--x"])
        .arg(&f)
        .arg("--y")
        .arg(&f)
        .args(["--k", "0", "--format", "labeled", "--perms", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["statistic"].as_f64().unwrap(), 1.0);
    assert_eq!(v["p_value"], serde_json::Value::Null);
}

#[test]
fn parse_error_exits_two_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "abc\n");
    let b = write(dir.path(), "b.csv", "2\n");
    let out = bin()
        .args(["test", "--x"])
        .arg(&a)
        .arg("--y")
        .arg(&b)
        .args(["--k", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":1:"), "stderr: {err}");
}

#[test]
fn roc_missing_config_exits_two() {
    let out = bin()
        .args(["roc", "--config", "/nonexistent/nope.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn roc_unknown_test_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "p = \"normal:0,1\"\nq = \"normal:0,1\"\nm = 10\nn = 10\nreps = 2\nseed = 1\ntests = [\"mystery\"]\n",
    );
    let out = bin().args(["roc", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn roc_smoke_config_under_five_seconds() {
    let repo_cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml");
    let start = Instant::now();
    let out = bin().args(["roc", "--config"]).arg(&repo_cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let v = stdout_json(&out);
    assert_valid("roc_summary.schema.json", &v);
}

#[test]
fn roc_writes_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write(
        dir.path(),
        "roc.toml",
        &format!(
            "p = \"normal:0,1\"\nq = \"normal:0.5,1\"\nm = 25\nn = 25\nreps = 40\nseed = 5\ntests = [\"ks\", \"hks:k=2\", \"oracle\"]\noutput = {:?}\n",
            out_dir
        ),
    );
    let out = bin().args(["roc", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("summary.json").is_file());
    assert!(out_dir.join("roc_ks.csv").is_file());
    assert!(out_dir.join("roc_hks_k_2.csv").is_file());
    assert!(out_dir.join("roc_oracle.csv").is_file());
    let csv = fs::read_to_string(out_dir.join("roc_ks.csv")).unwrap();
    assert!(csv.starts_with("threshold,fpr,tpr\n"));
}

#[test]
fn null_sim_single_draw() {
    let out = bin()
        .args([
            "null-sim", "--dist", "normal:0,1", "--k", "0", "--grid", "16", "--draws", "1",
            "--seed", "9",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# dist=normal:0,1 k=0 grid=16 draws=1 seed=9"));
    assert!(lines[1].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn null_sim_student_t_order_two_smoke() {
    let out = bin()
        .args([
            "null-sim", "--dist", "t:3", "--k", "2", "--grid", "24", "--draws", "5", "--seed",
            "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 6);
}

#[test]
fn null_sim_bad_spec_exits_one() {
    let out = bin()
        .args(["null-sim", "--dist", "zeta:2", "--k", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn witness_curve_and_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1\n");
    let b = write(dir.path(), "b.csv", "2\n");
    let out = bin()
        .args(["witness", "--x"])
        .arg(&a)
        .arg("--y")
        .arg(&b)
        .args(["--k", "2", "--grid", "32"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# t_star=0 side=plus"));
    assert!(text.contains("zero_gap=false"));
    assert_eq!(text.lines().count(), 2 + 32);

    let same = write(dir.path(), "same.csv", "1\n2\n");
    let out = bin()
        .args(["witness", "--x"])
        .arg(&same)
        .arg("--y")
        .arg(&same)
        .args(["--k", "1", "--grid", "8"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("zero_gap=true"), "{text}");
}

#[test]
fn baselines_subcommand_schema_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "0\n");
    let b = write(dir.path(), "b.csv", "1\n");
    let out = bin()
        .args(["baselines", "--x"])
        .arg(&a)
        .arg("--y")
        .arg(&b)
        .args(["--bandwidth", "1", "--degree", "1", "--perms", "9", "--seed", "4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_valid("baselines.schema.json", &v);
    assert_eq!(v["tests"]["energy"]["statistic"].as_f64().unwrap(), 2.0);
    let mmd = v["tests"]["mmd_gaussian"]["statistic"].as_f64().unwrap();
    assert!((mmd - 0.7869386805747332).abs() < 1e-12);
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("normal:MEAN,SD"));
}
