use std::io::Write;

use anyhow::Result;

use eoe_core::sim::{run_samples, Execution, SampleSummary, Simulator};

use crate::config::{ExperimentConfig, Format};
use crate::output::{fmt_f64, Header};

pub const DEFAULT_REPS: u64 = 1000;

pub fn resolve(cfg: &mut ExperimentConfig) {
    cfg.reps.get_or_insert(DEFAULT_REPS);
    cfg.engine.get_or_insert_with(Default::default);
    cfg.s_grid.get_or_insert_with(Vec::new);
}

pub fn write(cfg: &ExperimentConfig, header: &Header, exec: Execution, out: &mut dyn Write) -> Result<()> {
    let g = cfg.graph_spec()?.build()?;
    let (lambda, gamma, reps) = (cfg.lambda()?, cfg.gamma()?, cfg.reps()?);
    let grid = cfg.s_grid()?;
    let sim = Simulator::new(&g, lambda, gamma, 0, cfg.engine.unwrap_or_default())?;
    let samples = run_samples(&sim, header.seed, 0..reps, exec)?;
    match cfg.format(Format::Csv) {
        Format::Json => {
            let summary = SampleSummary::new(samples.iter().map(|s| s.t).collect(), &grid)?;
            let doc = serde_json::json!({
                "header": header,
                "engine": sim.engine(),
                "summary": summary.report(),
            });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => {
            out.write_all(header.comment_block().as_bytes())?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["rep", "T", "n_jumps", "n_reinfections"])?;
            for (rep, s) in samples.iter().enumerate() {
                w.write_record([
                    rep.to_string(),
                    fmt_f64(s.t),
                    s.n_jumps.to_string(),
                    s.n_reinfections.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
