use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn lcfix(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcfix")).args(args).output().expect("binary runs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<&std::ffi::OsStr> = extra.iter().map(|s| s.as_ref()).collect();
    args.extend(["run".as_ref(), config.as_os_str(), "--out".as_ref(), out.as_os_str()]);
    lcfix(&args)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const BAD_F: &str = r#"
schema_version = 1
mode = "viscosity"
dimension = 2

[[seminorms]]
label = "e"
kind = "euclidean"

[region]
kind = "ball"
radius = 1.0

[map_t]
kind = "identity"

[map_f]
kind = "affine"
matrix = [[1.0, 0.0], [0.0, 1.0]]
modulus = 1.5
"#;

#[test]
fn invalid_modulus_is_rejected_with_exit_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", BAD_F);
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("map_f: contraction modulus must be < 1, got 1.5"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn dimension_mismatch_is_reported() {
    let tmp = TempDir::new().unwrap();
    let text = BAD_F
        .replace("kind = \"euclidean\"", "matrix = [[1.0, 0.0, 0.0]]")
        .replace("modulus = 1.5", "modulus = 0.5");
    let cfg = write(tmp.path(), "dim.toml", &text);
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seminorm 'e': dimension mismatch"), "{err}");
}

#[test]
fn malformed_toml_fails() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "broken.toml", "mode = [");
    assert_eq!(run(&cfg, &tmp.path().join("out"), &[]).status.code(), Some(1));
    assert_eq!(run(&tmp.path().join("missing.toml"), &tmp.path().join("out"), &[]).status.code(), Some(1));
}

#[test]
fn clean_run_writes_records_and_exits_0() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("oracle");
    let out = run(&configs().join("neg_identity_oracle.toml"), &out_dir, &["--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["exit_code"], 0);
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("oracle_dev"));
    assert_eq!(csv.lines().count(), 101);
}

#[test]
fn picard_history_matches_certificate() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("picard");
    assert_eq!(run(&configs().join("picard_scalar.toml"), &out_dir, &[]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(out_dir.join("trajectory.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let ix = headers.iter().position(|h| h == "x0").unwrap();
    for (n, rec) in reader.records().take(41).enumerate() {
        let x: f64 = rec.unwrap()[ix].parse().unwrap();
        assert!(((x - 2.0).abs() - 2.0 * 0.5f64.powi(n as i32)).abs() <= 1e-12);
    }
}

#[test]
fn flagged_instance_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = run(&configs().join("rotation_coordinate_flag.toml"), &tmp.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("flagged"));
}

#[test]
fn seed_override_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("s");
    assert_eq!(run(&configs().join("kernel_flag.toml"), &out_dir, &["--seed", "99"]).status.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);
}

#[test]
fn suite_reports_worst_status() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("cfgs");
    std::fs::create_dir(&dir).unwrap();
    for name in ["neg_identity_oracle.toml", "kernel_flag.toml"] {
        std::fs::copy(configs().join(name), dir.join(name)).unwrap();
    }
    let root = tmp.path().join("out");
    let out = lcfix(&["suite".as_ref(), dir.as_os_str(), "--out".as_ref(), root.as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(root.join("neg_identity_oracle/trajectory.csv").is_file());
    assert!(root.join("kernel_flag/audit.json").is_file());

    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(lcfix(&["suite".as_ref(), empty.as_os_str()]).status.code(), Some(1));
}

#[test]
fn compare_writes_both_residual_columns() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("cmp");
    let out = lcfix(&[
        "--quiet".as_ref(),
        "compare".as_ref(),
        configs().join("neg_identity_oracle.toml").as_os_str(),
        "--out".as_ref(),
        out_dir.as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "n,eps,implicit_residual_euclidean,mann_residual_euclidean");
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("neg_identity_oracle.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &[]).status.code(), Some(0));
    for f in ["trajectory.csv", "audit.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
