//! Output headers and number formatting shared by every subcommand.

use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const CONFIG_MARKER: &str = "# config:";

/// Provenance block written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    /// The resolved configuration as TOML, minus the output path so the
    /// same experiment gives the same bytes wherever it is written.
    pub config: String,
}

impl Header {
    pub fn new(command: &'static str, seed: u64, config: &ExperimentConfig) -> Self {
        let mut config = config.clone();
        if let Some(out) = config.output.as_mut() {
            out.path = None;
            if out.format.is_none() {
                config.output = None;
            }
        }
        Header {
            tool: "eoe",
            version: VERSION,
            command,
            seed,
            config: config.to_toml(),
        }
    }

    /// `#`-prefixed lines for CSV artifacts.
    pub fn comment_block(&self) -> String {
        let mut out = format!("# {} {} {}\n# seed: {}\n{CONFIG_MARKER}\n", self.tool, self.version, self.command, self.seed);
        for line in self.config.lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Recovers the configuration echoed into a CSV or JSON artifact.
pub fn config_from_artifact(text: &str) -> Result<ExperimentConfig, ConfigError> {
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let toml = v["header"]["config"]
            .as_str()
            .ok_or_else(|| ConfigError::Parse("artifact has no header.config".into()))?;
        return ExperimentConfig::from_toml_str(toml);
    }
    let mut lines = text.lines().skip_while(|l| *l != CONFIG_MARKER);
    if lines.next().is_none() {
        return Err(ConfigError::Parse("artifact has no config block".into()));
    }
    let mut toml = String::new();
    for line in lines.take_while(|l| l.starts_with('#')) {
        toml.push_str(line.strip_prefix("# ").unwrap_or(&line[1..]));
        toml.push('\n');
    }
    ExperimentConfig::from_toml_str(&toml)
}
