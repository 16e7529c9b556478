use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matweight")).args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exact_tier_passes_on_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--tier", "exact"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("verify.json"));
    assert_eq!(r["result"]["failed"], 0);
    assert_eq!(r["config"]["filters"]["level"], 9);
    assert!(r["source_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn apdim_recovers_the_power_weight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"weight": {"n": 1, "m": 1, "kind": {"kind": "power_log", "a": -0.5, "b": 0.0}}, "p": 2}"#;
    let o = run(&["apdim", "--config", cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&dir.path().join("apdim.json"))["result"]["primary"]["estimate"].as_f64().unwrap();
    assert!((0.4..=0.6).contains(&d), "{d}");
    let csv = std::fs::read_to_string(dir.path().join("apdim.csv")).unwrap();
    assert!(csv.starts_with("i,a,log2_a,"));
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = r#"{"weight": "identity", "p": 2, "draws": 3}"#;
    for d in [&a, &b] {
        assert!(run(&["norms", "--config", cfg, "--seed", "11"], d.path()).status.success());
    }
    for f in ["norms.json", "norms.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["filters", "--config", r#"{"weight": "identity", "p": 0}"#], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let diag: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["error"], "config_invalid");
    let o = run(&["filters", "--config", "/nonexistent.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn filters_and_reduce_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["filters"], dir.path()).status.success());
    let cfg = r#"{"weight": {"n": 1, "m": 1, "kind": {"kind": "power_log", "a": 0.5, "b": 0.0}}, "p": 2, "window": {"j_min": 1, "j_max": 3}}"#;
    assert!(run(&["reduce", "--config", cfg], dir.path()).status.success());
    let rows = std::fs::read_to_string(dir.path().join("reduce.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 2 + 4 + 8);
    assert_eq!(std::fs::read_to_string(dir.path().join("filters.csv")).unwrap().lines().count(), 513);
}
