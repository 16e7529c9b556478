//! Report files. Every JSON report carries the tool version, a hash of the
//! source it was built from and the fully resolved configuration; none carry
//! timings, so two runs with the same seed write identical bytes.

use crate::config::ExperimentConfig;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SOURCE_HASH: &str = env!("MATWEIGHT_SOURCE_HASH");

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn envelope(command: &str, cfg: &ExperimentConfig, seed: u64, result: impl Serialize) -> Result<Value, ReportError> {
    Ok(json!({
        "tool": "matweight",
        "version": VERSION,
        "source_hash": SOURCE_HASH,
        "command": command,
        "seed": seed,
        "config": cfg,
        "result": serde_json::to_value(result)?,
    }))
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, ReportError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    create(dir)?;
    std::fs::write(&path, text).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<PathBuf, ReportError> {
    let path = dir.join(name);
    create(dir)?;
    let err = |source| ReportError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| ReportError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn create(dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.into(), source })
}
