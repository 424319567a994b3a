//! Experiment configuration: a strict TOML document whose resolved form is
//! echoed into every output header.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use eoe_core::asymptotics::RateFn;
use eoe_core::sim::Engine;
use eoe_core::transforms::{CompleteVariant, Subject};
use eoe_core::GraphSpec;

/// Configuration problems. All of them map to exit code 2.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Distance of the scaled samples to the limit law along the grid.
    Convergence,
    /// Growth or collapse of the unscaled samples along the grid.
    Divergence,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
}

/// A builtin schedule by name, optionally with its rate functions replaced,
/// e.g. `schedule.lambda.exponent = 1.5`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub name: Option<String>,
    pub n_grid: Option<Vec<usize>>,
    pub mode: Option<SweepMode>,
    pub lambda: Option<RateFn>,
    pub gamma: Option<RateFn>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Everything a run depends on. Worker count is deliberately absent: it
/// never changes results.
///
/// Scalars come before tables so the TOML serialisation is always valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: Option<String>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub s_grid: Option<Vec<f64>>,
    pub engine: Option<Engine>,
    pub variant: Option<CompleteVariant>,
    pub subjects: Option<Vec<Subject>>,
    pub rates: Option<Rates>,
    pub schedule: Option<ScheduleConfig>,
    pub output: Option<OutputConfig>,
}

macro_rules! overlay_fields {
    ($dst:expr, $src:expr; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Replaces every value that `top` sets.
    pub fn overlay(&mut self, top: ExperimentConfig) {
        overlay_fields!(self, top; graph, reps, seed, s_grid, engine, variant, subjects);
        if let Some(r) = top.rates {
            let dst = self.rates.get_or_insert_with(Default::default);
            overlay_fields!(dst, r; lambda, gamma);
        }
        if let Some(s) = top.schedule {
            let dst = self.schedule.get_or_insert_with(Default::default);
            overlay_fields!(dst, s; name, n_grid, mode, lambda, gamma);
        }
        if let Some(o) = top.output {
            let dst = self.output.get_or_insert_with(Default::default);
            overlay_fields!(dst, o; path, format);
        }
    }

    /// Fills the seed from `EOE_SEED` when nothing else set it, then 0.
    pub fn resolve_seed(&mut self) -> Result<u64, ConfigError> {
        if self.seed.is_none() {
            let env = std::env::var("EOE_SEED").ok();
            self.seed = Some(match env.as_deref().map(str::trim) {
                Some(v) if !v.is_empty() => v
                    .parse()
                    .map_err(|_| invalid("seed", format!("EOE_SEED=`{v}` is not an unsigned integer")))?,
                _ => 0,
            });
        }
        let seed = self.seed.unwrap_or_default();
        // TOML integers are signed 64-bit; keep the echo re-parseable
        if i64::try_from(seed).is_err() {
            return Err(invalid("seed", "must be below 2^63"));
        }
        Ok(seed)
    }

    pub fn graph_spec(&self) -> Result<GraphSpec, ConfigError> {
        let s = self.graph.as_deref().ok_or(ConfigError::Missing("graph"))?;
        s.parse().map_err(|e: eoe_core::GraphError| invalid("graph", e.to_string()))
    }

    pub fn lambda(&self) -> Result<f64, ConfigError> {
        let v = self.rates.as_ref().and_then(|r| r.lambda);
        positive("rates.lambda", v.ok_or(ConfigError::Missing("rates.lambda"))?)
    }

    pub fn gamma(&self) -> Result<f64, ConfigError> {
        let v = self.rates.as_ref().and_then(|r| r.gamma);
        positive("rates.gamma", v.ok_or(ConfigError::Missing("rates.gamma"))?)
    }

    pub fn reps(&self) -> Result<u64, ConfigError> {
        match self.reps {
            None => Err(ConfigError::Missing("reps")),
            Some(0) => Err(invalid("reps", "must be positive")),
            Some(r) => Ok(r),
        }
    }

    pub fn s_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let grid = self.s_grid.clone().unwrap_or_default();
        for &s in &grid {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("s_grid", format!("{s} is not a positive number")));
            }
        }
        Ok(grid)
    }

    pub fn n_grid(&self) -> Result<Vec<usize>, ConfigError> {
        let grid = self
            .schedule
            .as_ref()
            .and_then(|s| s.n_grid.clone())
            .ok_or(ConfigError::Missing("schedule.n_grid"))?;
        if grid.is_empty() || grid.contains(&0) {
            return Err(invalid("schedule.n_grid", "needs positive sizes"));
        }
        Ok(grid)
    }

    pub fn output_path(&self) -> Option<&Path> {
        self.output.as_ref().and_then(|o| o.path.as_deref())
    }

    /// Explicit format, else inferred from the output extension, else `fallback`.
    pub fn format(&self, fallback: Format) -> Format {
        if let Some(f) = self.output.as_ref().and_then(|o| o.format) {
            return f;
        }
        match self.output_path().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            _ => fallback,
        }
    }
}

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("{v} is not a positive number")))
    }
}
