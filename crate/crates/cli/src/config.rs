//! Optional JSON config file providing defaults for common flags.
//! Precedence: explicit flag, then config value, then FOCKCHIP_SEED for
//! the seed, then the built-in default.

use std::path::Path;

use serde::Deserialize;

use crate::util::{read_file, CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reflectivity source: "design", "measured" or a JSON file path.
    pub eta: Option<String>,
    pub seed: Option<u64>,
    /// Expected pairs per Monte-Carlo point.
    pub pairs: Option<u64>,
    /// Phase-grid size for sweeps.
    pub points: Option<usize>,
    /// Output format: "text", "csv" or "json" depending on the command.
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = read_file(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Io(format!("bad config {}: {e}", p.display())))
            }
        }
    }

    pub fn eta(&self, flag: Option<&String>) -> String {
        flag.cloned()
            .or_else(|| self.eta.clone())
            .unwrap_or_else(|| "design".into())
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed)
            .or_else(|| {
                std::env::var("FOCKCHIP_SEED")
                    .ok()
                    .and_then(|s| s.parse().ok())
            })
            .unwrap_or(0)
    }

    pub fn pairs(&self, flag: Option<u64>) -> u64 {
        flag.or(self.pairs).unwrap_or(110_000)
    }

    pub fn points(&self, flag: Option<usize>) -> usize {
        flag.or(self.points).unwrap_or(16)
    }

    pub fn format(&self, flag: Option<&String>, default: &str) -> String {
        flag.cloned()
            .or_else(|| self.format.clone())
            .unwrap_or_else(|| default.into())
    }
}
