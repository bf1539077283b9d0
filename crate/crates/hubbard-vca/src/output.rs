//! Deterministic output artifacts: comma-separated tables with header rows
//! and a JSON manifest per stage.
//!
//! Floats are rendered with a fixed scientific format so identical runs
//! produce byte-identical data files. Complex values appear as paired
//! re/im columns. The manifest echoes the full configuration, the seed and
//! the artifact list; wall time is informational and is the one field that
//! may differ between otherwise identical runs.

use crate::error::Result;
use num_complex::Complex64;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Fixed float rendering used in every table.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn fmt_c(z: Complex64) -> [String; 2] {
    [fmt_f(z.re), fmt_f(z.im)]
}

/// Write one CSV table with a header row.
pub fn write_table<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(buf.as_bytes())?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(stage: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            tool: "hubbard-vca".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            stage: stage.to_string(),
            seed,
            config,
            artifacts: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Create the stage output directory (nested under the configured root).
pub fn stage_dir(root: &str, stage: &str) -> Result<PathBuf> {
    let dir = Path::new(root).join(stage);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}
