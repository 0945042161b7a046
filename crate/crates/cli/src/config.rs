use std::path::PathBuf;

use clap::ValueEnum;
use lpvar_core::conjugate;
use serde::Serialize;

use crate::error::CliError;

pub const DEFAULT_P: f64 = 2.0;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_K: u32 = 10;
pub const DEFAULT_NODES: usize = 4096;
pub const DEFAULT_SAMPLES: usize = 100_000;

pub const MAX_K: u32 = lpvar_core::rv::MAX_MATERIALIZED_LEVEL;
pub const MAX_NODES: usize = 10_000_000;
pub const MIN_SAMPLES: usize = lpvar_core::distribution::MIN_SAMPLES;
pub const MAX_SAMPLES: usize = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Problem2,
    Expectation,
    Approx,
    Duality,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One fully resolved invocation. Fields a command does not use are `None`.
///
/// The output path is deliberately left out of the serialized form: it says
/// where the report goes, not what it contains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

fn usage(flag: &'static str, message: String) -> CliError {
    CliError::Usage { flag, message }
}

impl RunConfig {
    /// Rejects out-of-range values before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = self.p {
            conjugate(p).map_err(|e| usage("--p", e.to_string()))?;
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(usage("--epsilon", format!("{eps} must lie in (0, 1)")));
            }
        }
        if let Some(k) = self.k {
            if !(1..=MAX_K).contains(&k) {
                return Err(usage("--k", format!("{k} must lie in 1..={MAX_K}")));
            }
        }
        if let Some(n) = self.nodes {
            if !(2..=MAX_NODES).contains(&n) {
                return Err(usage("--nodes", format!("{n} must lie in 2..={MAX_NODES}")));
            }
        }
        if let Some(n) = self.samples {
            if !(MIN_SAMPLES..=MAX_SAMPLES).contains(&n) {
                return Err(usage(
                    "--samples",
                    format!("{n} must lie in {MIN_SAMPLES}..={MAX_SAMPLES}"),
                ));
            }
        }
        if let Some(path) = &self.output_path {
            if path.as_os_str().is_empty() {
                return Err(usage("--out", "path is empty".into()));
            }
        }
        Ok(())
    }

    /// `(key, value)` pairs echoed into every report header.
    pub fn header_pairs(&self) -> Vec<(String, serde_json::Value)> {
        match serde_json::to_value(self).expect("config serializes") {
            serde_json::Value::Object(map) => map.into_iter().collect(),
            _ => unreachable!("RunConfig serializes as an object"),
        }
    }
}
