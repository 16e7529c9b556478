//! All acceptance criteria at their pinned tolerances, one line each.

use matweight_cli::config::ExperimentConfig;
use matweight_cli::suite::{Suite, ALL};
use std::process::Command;
use std::time::{Duration, Instant};

fn budget(id: u32) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(1)),
        2 => Some(Duration::from_secs(30)),
        6 => Some(Duration::from_secs(120)),
        _ => None,
    }
}

fn verify_report(dir: &std::path::Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_matweight"))
        .args(["verify", "--seed", "7", "--out"])
        .arg(dir)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(dir.join("verify.json")).unwrap()
}

fn main() {
    let cfg = ExperimentConfig::parse(r#"{"weight": "identity", "p": 2}"#).unwrap();
    let suite = Suite::new(cfg, 7);
    let mut failed = Vec::new();
    for id in ALL {
        let start = Instant::now();
        let mut c = suite.run(id);
        let took = start.elapsed();
        if let Some(limit) = budget(id) {
            if took > limit {
                c.passed = false;
                c.summary = format!("{} (took {took:?}, limit {limit:?})", c.summary);
            }
        }
        if id == 13 {
            let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
            let same = verify_report(a.path()) == verify_report(b.path());
            c.passed &= same;
            c.summary = format!("{}; two binary runs wrote {} reports", c.summary, if same { "identical" } else { "different" });
        }
        println!("{}", c.line());
        if !c.passed {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", ALL.len());
}
