//! Artifact writers: CSV tables (comma separator, `.` decimals, LF line
//! endings, minimal quoting) and the JSON run manifest.

use std::fs;
use std::path::PathBuf;

use crate::config::{Manifest, RunConfig};
use crate::errors::{CliError, CliResult};

/// Output directory of one run; creating it is deferred until the first
/// artifact so a failed validation leaves nothing behind.
pub struct OutDir {
    path: PathBuf,
}

impl OutDir {
    pub fn new(path: PathBuf) -> OutDir {
        OutDir { path }
    }

    fn ensure(&self) -> CliResult<()> {
        fs::create_dir_all(&self.path)
            .map_err(|e| CliError::io(self.path.display().to_string(), e))
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Write one CSV file.  Every row must match the header width.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        self.ensure()?;
        let path = self.file(name);
        let io_err = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path.display().to_string(), io),
            other => CliError::Format(format!("csv write failed: {other:?}")),
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(io_err)?;
        w.write_record(header).map_err(io_err)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "row width must match header");
            w.write_record(row).map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }

    /// Write a plain text file (plot data, summaries).
    pub fn write_text(&self, name: &str, content: &str) -> CliResult<PathBuf> {
        self.ensure()?;
        let path = self.file(name);
        fs::write(&path, content).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }

    /// Write the run manifest from the fully resolved configuration.
    pub fn write_manifest(&self, cfg: &RunConfig, wall_time_s: f64) -> CliResult<PathBuf> {
        self.ensure()?;
        let master_seed = cfg
            .get("seed")
            .and_then(|s| s.parse::<u64>().ok())
            .unwrap_or_default();
        let manifest = Manifest {
            experiment: cfg.experiment.clone(),
            master_seed,
            parameters: cfg.params.clone(),
            binary: env!("FPP_LAB_GIT_DESCRIBE").to_string(),
            wall_time_s,
        };
        let path = self.file("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Format(format!("manifest serialization failed: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

/// Shortest-roundtrip decimal form of a float (`.` decimal separator by
/// construction).  Empty cells in a CSV are written as `""`-free empty
/// strings, so `None` maps to an empty field.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Join vector components with `|` so direction cells stay comma-free.
pub fn fmt_components<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("|")
}
