//! Command-line front end: `transform`, `simulate`, `sweep` and `verify`.
//!
//! Every artifact starts with a header recording the tool version, the seed
//! and the fully resolved configuration, which re-parses with
//! [`config_from_artifact`].

// `!(x <= y)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use eoe_core::asymptotics::RateFn;
use eoe_core::sim::{Engine, Execution};
use eoe_core::transforms::{CompleteVariant, Subject};

pub use commands::verify::{oracle_suite, CheckResult, Scope, VerifyReport};
pub use config::{ConfigError, ExperimentConfig, Format, SweepMode};
pub use output::{config_from_artifact, fmt_f64, Header};

use config::{OutputConfig, Rates, ScheduleConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eoe", version, about = "End-of-epidemic time of two random walkers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Laplace transforms of N, M or T as CSV rows.
    Transform(TransformArgs),
    /// Monte Carlo replications of T.
    Simulate(SimulateArgs),
    /// Scaled-limit convergence (or divergence) along a size grid.
    Sweep(SweepArgs),
    /// Exact cross-checks; exits 1 when any check fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// `complete:n`, `bipartite:m:n`, `ring:n` or `generic:<edge-list>`.
    #[arg(long)]
    pub graph: Option<String>,
    /// Walk rate of each walker.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Recovery rate of each infected agent.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Comma-separated transform arguments.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub s_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated subset of N, M, T.
    #[arg(long, value_delimiter = ',', value_parser = parse_subject)]
    pub subjects: Option<Vec<Subject>>,
    /// Complete-graph jump law: `exact` or `lazy`.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<CompleteVariant>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Falls back to the config, then `EOE_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub engine: Option<Engine>,
    /// Worker cap; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Builtin schedule name.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Comma-separated graph sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub mode: Option<SweepMode>,
    /// Override the walk rate as `coef,exponent[,log_exponent]` in n.
    #[arg(long, value_parser = parse_rate)]
    pub lambda: Option<RateFn>,
    /// Override the recovery rate as `coef,exponent[,log_exponent]` in n.
    #[arg(long, value_parser = parse_rate)]
    pub gamma: Option<RateFn>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Graphs up to 6 vertices instead of 10.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_subject(s: &str) -> Result<Subject, String> {
    match s.trim() {
        "N" | "n" => Ok(Subject::N),
        "M" | "m" => Ok(Subject::M),
        "T" | "t" => Ok(Subject::T),
        other => Err(format!("unknown subject `{other}` (expected N, M or T)")),
    }
}

fn parse_variant(s: &str) -> Result<CompleteVariant, String> {
    match s {
        "exact" => Ok(CompleteVariant::Exact),
        "lazy" => Ok(CompleteVariant::Lazy),
        other => Err(format!("unknown variant `{other}` (expected exact or lazy)")),
    }
}

fn parse_rate(s: &str) -> Result<RateFn, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [coef] => Ok(RateFn::constant(coef)),
        [coef, exponent] => Ok(RateFn::power(coef, exponent)),
        [coef, exponent, log_exponent] => Ok(RateFn {
            coef,
            exponent,
            log_exponent,
        }),
        _ => Err("expected coef[,exponent[,log_exponent]]".into()),
    }
}

impl OutputArgs {
    fn base(&self) -> Result<ExperimentConfig, ConfigError> {
        self.config
            .as_deref()
            .map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
    }

    fn layer(&self) -> Option<OutputConfig> {
        (self.out.is_some() || self.format.is_some()).then(|| OutputConfig {
            path: self.out.clone(),
            format: self.format,
        })
    }
}

impl ModelArgs {
    fn layer(&self) -> ExperimentConfig {
        ExperimentConfig {
            graph: self.graph.clone(),
            s_grid: self.s_grid.clone(),
            rates: (self.lambda.is_some() || self.gamma.is_some()).then_some(Rates {
                lambda: self.lambda,
                gamma: self.gamma,
            }),
            ..Default::default()
        }
    }
}

/// Config file, then flags on top, then subcommand defaults.
fn resolve(cmd: &Command) -> Result<ExperimentConfig, ConfigError> {
    let (mut cfg, top) = match cmd {
        Command::Transform(a) => {
            let mut top = a.model.layer();
            top.subjects = a.subjects.clone();
            top.variant = a.variant;
            top.output = a.output.layer();
            (a.output.base()?, top)
        }
        Command::Simulate(a) => {
            let mut top = a.model.layer();
            top.reps = a.reps;
            top.seed = a.seed;
            top.engine = a.engine;
            top.output = a.output.layer();
            (a.output.base()?, top)
        }
        Command::Sweep(a) => {
            let schedule = ScheduleConfig {
                name: a.schedule.clone(),
                n_grid: a.n_grid.clone(),
                mode: a.mode,
                lambda: a.lambda,
                gamma: a.gamma,
            };
            let top = ExperimentConfig {
                reps: a.reps,
                seed: a.seed,
                schedule: (schedule != ScheduleConfig::default()).then_some(schedule),
                output: a.output.layer(),
                ..Default::default()
            };
            (a.output.base()?, top)
        }
        Command::Verify(a) => {
            let top = ExperimentConfig {
                output: a.out.clone().map(|path| OutputConfig {
                    path: Some(path),
                    format: Some(Format::Json),
                }),
                ..Default::default()
            };
            (ExperimentConfig::default(), top)
        }
    };
    cfg.overlay(top);
    match cmd {
        Command::Transform(_) => commands::transform::resolve(&mut cfg),
        Command::Simulate(_) => commands::simulate::resolve(&mut cfg),
        Command::Sweep(_) => commands::sweep::resolve(&mut cfg),
        Command::Verify(_) => {}
    }
    cfg.resolve_seed()?;
    Ok(cfg)
}

/// How a successful invocation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ChecksFailed,
}

/// Runs a parsed command, writing to `--out` or to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Status> {
    let cfg = resolve(&cli.command)?;
    let seed = cfg.seed.unwrap_or_default();
    let mut file;
    let out: &mut dyn Write = match cfg.output_path() {
        Some(path) => {
            file = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
            &mut file
        }
        None => stdout,
    };
    let status = match &cli.command {
        Command::Transform(_) => {
            commands::transform::write(&cfg, &Header::new("transform", seed, &cfg), out)?;
            Status::Ok
        }
        Command::Simulate(a) => {
            let exec = Execution::with_threads(a.threads);
            commands::simulate::write(&cfg, &Header::new("simulate", seed, &cfg), exec, out)?;
            Status::Ok
        }
        Command::Sweep(a) => {
            let exec = Execution::with_threads(a.threads);
            commands::sweep::write(&cfg, &Header::new("sweep", seed, &cfg), exec, out)?;
            Status::Ok
        }
        Command::Verify(a) => {
            let scope = if a.quick { Scope::Quick } else { Scope::Full };
            match commands::verify::write(scope, &Header::new("verify", seed, &cfg), out)? {
                true => Status::Ok,
                false => Status::ChecksFailed,
            }
        }
    };
    out.flush()?;
    Ok(status)
}

/// Parses `argv`, runs it and maps the outcome to an exit code: 0 success,
/// 1 runtime failure or failed checks, 2 usage and configuration errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::ChecksFailed) => {
            eprintln!("eoe: verification failed");
            EXIT_FAILURE
        }
        Err(e) => {
            eprintln!("eoe: {e:#}");
            if e.chain().any(|c| c.is::<ConfigError>()) {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}
