use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use eoe_core::graph::Family;
use eoe_core::transforms::{Subject, TransformEvaluator};

use crate::config::{ExperimentConfig, Format};
use crate::output::{fmt_f64, Header};

pub const DEFAULT_S_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformRow {
    pub subject: Subject,
    pub family: &'static str,
    pub n: usize,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub s: f64,
    pub value: f64,
    pub provenance: String,
}

/// Fills transform defaults into `cfg`.
pub fn resolve(cfg: &mut ExperimentConfig) {
    cfg.s_grid.get_or_insert_with(|| DEFAULT_S_GRID.to_vec());
    cfg.subjects.get_or_insert_with(|| vec![Subject::T]);
    cfg.variant.get_or_insert_with(Default::default);
}

pub fn rows(cfg: &ExperimentConfig) -> Result<Vec<TransformRow>> {
    let g = cfg.graph_spec()?.build()?;
    let grid = cfg.s_grid()?;
    let subjects = cfg.subjects.clone().unwrap_or_else(|| vec![Subject::T]);
    let m = match g.family() {
        Family::CompleteBipartite { m } => Some(m),
        _ => None,
    };
    let jumps = TransformEvaluator::jump_count_for_graph(&g, cfg.variant.unwrap_or_default())?;
    let mut out = Vec::with_capacity(subjects.len() * grid.len());
    for subject in subjects {
        let (ev, lambda, gamma) = match subject {
            Subject::N => (jumps.clone(), None, None),
            Subject::M => {
                let lambda = cfg.lambda()?;
                (TransformEvaluator::meeting_time(&jumps, lambda)?, Some(lambda), None)
            }
            Subject::T => {
                let (lambda, gamma) = (cfg.lambda()?, cfg.gamma()?);
                let meeting = TransformEvaluator::meeting_time(&jumps, lambda)?;
                (TransformEvaluator::epidemic_time(&meeting, lambda, gamma)?, Some(lambda), Some(gamma))
            }
        };
        for &s in &grid {
            out.push(TransformRow {
                subject,
                family: g.family().name(),
                n: g.n(),
                m,
                lambda,
                gamma,
                s,
                value: ev.eval(s)?,
                provenance: ev.provenance().to_string(),
            });
        }
    }
    Ok(out)
}

pub fn write(cfg: &ExperimentConfig, header: &Header, out: &mut dyn Write) -> Result<()> {
    let rows = rows(cfg)?;
    match cfg.format(Format::Csv) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &serde_json::json!({ "header": header, "rows": rows }))?;
            writeln!(out)?;
        }
        Format::Csv => {
            out.write_all(header.comment_block().as_bytes())?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["subject", "family", "n", "m", "lambda", "gamma", "s", "value", "provenance"])?;
            let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
            for r in &rows {
                w.write_record([
                    r.subject.to_string(),
                    r.family.to_string(),
                    r.n.to_string(),
                    r.m.map(|m| m.to_string()).unwrap_or_default(),
                    opt(r.lambda),
                    opt(r.gamma),
                    fmt_f64(r.s),
                    fmt_f64(r.value),
                    r.provenance.clone(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
