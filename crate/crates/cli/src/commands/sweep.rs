use std::io::Write;

use anyhow::{bail, Result};

use eoe_core::asymptotics::{convergence_check, AsymptoticsError, divergence_probe, schedule_by_name, ScalingSchedule};
use eoe_core::sim::Execution;

use crate::config::{ConfigError, ExperimentConfig, Format, SweepMode};
use crate::output::Header;

pub const DEFAULT_REPS: u64 = 10_000;

pub fn resolve(cfg: &mut ExperimentConfig) {
    cfg.reps.get_or_insert(DEFAULT_REPS);
    if let Some(s) = cfg.schedule.as_mut() {
        s.mode.get_or_insert(SweepMode::Convergence);
    }
}

/// The named builtin with any rate overrides from the config applied.
pub fn schedule(cfg: &ExperimentConfig) -> Result<ScalingSchedule> {
    let sc = cfg.schedule.as_ref().ok_or(ConfigError::Missing("schedule.name"))?;
    let name = sc.name.as_deref().ok_or(ConfigError::Missing("schedule.name"))?;
    let mut schedule = schedule_by_name(name).map_err(|e| ConfigError::Invalid {
        key: "schedule.name",
        reason: e.to_string(),
    })?;
    if let Some(l) = sc.lambda {
        schedule.lambda = l;
    }
    if let Some(g) = sc.gamma {
        schedule.gamma = g;
    }
    schedule.validate().map_err(|e| ConfigError::Invalid {
        key: "schedule",
        reason: e.to_string(),
    })?;
    Ok(schedule)
}

/// A grid the schedule cannot run on is a usage error, not a runtime failure.
fn classify(e: AsymptoticsError) -> anyhow::Error {
    match e {
        AsymptoticsError::RegimeViolation { .. } | AsymptoticsError::InvalidGrid(_) => ConfigError::Invalid {
            key: "schedule.n_grid",
            reason: e.to_string(),
        }
        .into(),
        other => other.into(),
    }
}

pub fn write(cfg: &ExperimentConfig, header: &Header, exec: Execution, out: &mut dyn Write) -> Result<()> {
    if cfg.format(Format::Json) != Format::Json {
        bail!(ConfigError::Invalid {
            key: "output.format",
            reason: "sweep writes JSON only".into(),
        });
    }
    let schedule = schedule(cfg)?;
    let n_grid = cfg.n_grid()?;
    let reps = cfg.reps()?;
    let mode = cfg.schedule.as_ref().and_then(|s| s.mode).unwrap_or(SweepMode::Convergence);
    let report = match mode {
        SweepMode::Convergence => {
            serde_json::to_value(convergence_check(&schedule, &n_grid, reps, header.seed, exec).map_err(classify)?)?
        }
        SweepMode::Divergence => {
            serde_json::to_value(divergence_probe(&schedule, &n_grid, reps, header.seed, exec).map_err(classify)?)?
        }
    };
    let doc = serde_json::json!({
        "header": header,
        "schedule": schedule,
        "mode": mode,
        "report": report,
    });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}
