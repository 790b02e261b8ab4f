//! Run configuration: a named experiment plus a flat string-to-string
//! parameter map.
//!
//! Parameters merge from three layers, later layers winning: built-in
//! defaults (applied lazily by each experiment), a config file given with
//! `--config` (either a flat `key=value` text file or a JSON manifest from
//! a previous run), and command-line flags.  After a run resolves all its
//! inputs, the fully-populated map goes into the manifest, so a run is
//! reproducible from the manifest alone.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::errors::{CliError, CliResult};

/// A named experiment and its flat parameter map.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
}

/// JSON manifest written next to every run's CSV output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub master_seed: u64,
    pub parameters: BTreeMap<String, String>,
    /// git describe of the binary that produced the run.
    pub binary: String,
    /// Wall-clock duration of the run in seconds.  Informational: the
    /// only manifest field that varies between identical reruns.
    pub wall_time_s: f64,
}

impl RunConfig {
    /// Merge a config file (when given) with command-line overrides.
    /// Flags win over the file.
    pub fn from_sources(
        experiment: &str,
        config_path: Option<&Path>,
        overrides: Vec<(String, Option<String>)>,
    ) -> CliResult<RunConfig> {
        let mut params = BTreeMap::new();
        if let Some(path) = config_path {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::io(path.display().to_string(), e))?;
            let (file_experiment, file_params) = parse_config_text(&text, path)?;
            if let Some(named) = file_experiment {
                if named != experiment {
                    return Err(CliError::usage(format!(
                        "config file {} describes experiment '{named}' but the \
                         subcommand is '{experiment}'",
                        path.display()
                    )));
                }
            }
            params.extend(file_params);
        }
        for (key, value) in overrides {
            if let Some(v) = value {
                params.insert(key, v);
            }
        }
        Ok(RunConfig { experiment: experiment.to_string(), params })
    }

    /// Read a parameter, recording `default` into the map when absent so
    /// the manifest always carries the value actually used.
    pub fn default_param(&mut self, key: &str, default: impl Display) -> String {
        self.params
            .entry(key.to_string())
            .or_insert_with(|| default.to_string())
            .clone()
    }

    pub fn set_param(&mut self, key: &str, value: impl Display) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(|s| s.as_str())
    }

    /// A parameter that must have been supplied by flag or config file.
    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.get(key).ok_or_else(|| {
            CliError::usage(format!(
                "missing required parameter '{key}' (pass --{} or put {key}=... \
                 in the config file)",
                key.replace('_', "-")
            ))
        })
    }

    pub fn parse_value<T>(&self, key: &str, raw: &str) -> CliResult<T>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        raw.trim().parse::<T>().map_err(|e| {
            CliError::usage(format!("parameter '{key}': cannot parse '{raw}': {e}"))
        })
    }

    pub fn require_parsed<T>(&self, key: &str) -> CliResult<T>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        let raw = self.require(key)?.to_string();
        self.parse_value(key, &raw)
    }

    pub fn optional_parsed<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        match self.get(key) {
            Some(raw) => {
                let raw = raw.to_string();
                Ok(Some(self.parse_value(key, &raw)?))
            }
            None => Ok(None),
        }
    }

    /// Read with default, parsed.
    pub fn default_parsed<T>(&mut self, key: &str, default: impl Display) -> CliResult<T>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        let raw = self.default_param(key, default);
        self.parse_value(key, &raw)
    }

    /// Comma-separated list, parsed elementwise.
    pub fn parse_list<T>(&self, key: &str, raw: &str) -> CliResult<Vec<T>>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        let items: CliResult<Vec<T>> = raw
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| self.parse_value(key, s))
            .collect();
        let items = items?;
        if items.is_empty() {
            return Err(CliError::usage(format!("parameter '{key}': empty list '{raw}'")));
        }
        Ok(items)
    }

    pub fn default_list<T>(&mut self, key: &str, default: &str) -> CliResult<Vec<T>>
    where
        T: std::str::FromStr,
        T::Err: Display,
    {
        let raw = self.default_param(key, default);
        self.parse_list(key, &raw)
    }
}

/// Detect and parse either config format: a JSON manifest (first
/// non-space byte `{`) or a flat `key=value` file with `#` comments.
fn parse_config_text(
    text: &str,
    path: &Path,
) -> CliResult<(Option<String>, BTreeMap<String, String>)> {
    if text.trim_start().starts_with('{') {
        let manifest: Manifest = serde_json::from_str(text).map_err(|e| {
            CliError::Format(format!("{} is not a valid run manifest: {e}", path.display()))
        })?;
        return Ok((Some(manifest.experiment), manifest.parameters));
    }
    let mut params = BTreeMap::new();
    let mut experiment = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Format(format!(
                "{} line {}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            )));
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key == "experiment" {
            experiment = Some(value);
        } else {
            params.insert(key, value);
        }
    }
    Ok((experiment, params))
}

/// Parse a direction given as comma-separated components; normalize to an
/// l2-unit vector so `--xi 1,1` means the diagonal.
pub fn parse_direction(cfg: &RunConfig, key: &str, raw: &str) -> CliResult<Vec<f64>> {
    let comps: Vec<f64> = cfg.parse_list(key, raw)?;
    if comps.len() < 2 {
        return Err(CliError::usage(format!(
            "parameter '{key}': need at least two components, got '{raw}'"
        )));
    }
    let norm = comps.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(CliError::usage(format!(
            "parameter '{key}': direction '{raw}' has no usable norm"
        )));
    }
    Ok(comps.iter().map(|c| c / norm).collect())
}
