//! Exact cross-checks between closed forms, recursions and linear solves.

use std::io::Write;
use std::sync::Arc;

use anyhow::Result;
use serde::Serialize;

use eoe_core::chain::meeting_chain;
use eoe_core::graph::{build_bipartite, build_complete, build_ring, Graph};
use eoe_core::oracle::{
    exact_laplace_m_pair, exact_laplace_t_joint, exact_pmf_n, ring_q_polynomials, ring_recursion_solve,
    ring_recursion_solve_q,
};
use eoe_core::transforms::{
    laplace_m_from_n, laplace_n_bipartite, laplace_n_generic, laplace_n_ring, laplace_t, laplace_t_from_n,
    CompleteVariant, JumpLaw, TransformEvaluator,
};

use crate::output::Header;

pub const RATES: [f64; 3] = [0.5, 1.0, 2.0];
pub const S_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

pub const TOL_EPIDEMIC: f64 = 1e-9;
pub const TOL_ROUTES: f64 = 1e-12;
pub const TOL_CLOSED_FORMS: f64 = 1e-10;
pub const TOL_HAND_VALUE: f64 = 1e-12;
pub const TOL_PMF_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Graphs with at most 6 vertices, rings up to 40.
    Quick,
    /// Graphs with at most 10 vertices, rings up to 200.
    Full,
}

impl Scope {
    fn max_n(self) -> usize {
        match self {
            Scope::Quick => 6,
            Scope::Full => 10,
        }
    }

    fn max_ring(self) -> usize {
        match self {
            Scope::Quick => 40,
            Scope::Full => 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cells: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scope: Scope,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cells: usize,
    max_error: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            cells: 0,
            max_error: 0.0,
        }
    }

    fn record(&mut self, a: f64, b: f64) {
        self.cells += 1;
        let e = (a - b).abs();
        // NaN must fail the check
        if !(e <= self.max_error) {
            self.max_error = if e.is_nan() { f64::INFINITY } else { e };
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cells: self.cells,
            max_error: self.max_error,
            tolerance: self.tolerance,
            passed: self.cells > 0 && self.max_error <= self.tolerance,
        }
    }
}

/// Complete graphs, stars, `K_{2,n-2}` and even rings up to `max_n` vertices.
pub fn family_graphs(max_n: usize) -> Result<Vec<Graph>> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        out.push(build_complete(n)?);
        for m in [1, 2] {
            if m < n {
                out.push(build_bipartite(m, n)?);
            }
        }
        if n >= 4 && n % 2 == 0 {
            out.push(build_ring(n)?);
        }
    }
    Ok(out)
}

fn epidemic_checks(graphs: &[Graph]) -> Result<(CheckResult, CheckResult)> {
    let mut joint = Tally::new("epidemic_transform_vs_joint_chain", TOL_EPIDEMIC);
    let mut routes = Tally::new("transform_routes", TOL_ROUTES);
    for g in graphs {
        let jumps = TransformEvaluator::jump_count_for_graph(g, CompleteVariant::Exact)?;
        for lambda in RATES {
            let meeting = TransformEvaluator::meeting_time(&jumps, lambda)?;
            for gamma in RATES {
                for s in S_GRID {
                    let via_m = laplace_t(&meeting, lambda, gamma, s)?;
                    joint.record(via_m, exact_laplace_t_joint(g, lambda, gamma, s, 0)?);
                    routes.record(via_m, laplace_t_from_n(&jumps, lambda, gamma, s)?);
                }
            }
        }
    }
    Ok((joint.finish(), routes.finish()))
}

fn meeting_check(graphs: &[Graph]) -> Result<CheckResult> {
    let mut t = Tally::new("meeting_time_decomposition", TOL_CLOSED_FORMS);
    for g in graphs {
        let jumps = TransformEvaluator::jump_count(JumpLaw::Chain(Arc::new(meeting_chain(g))))?;
        let (u, v) = g.first_edge();
        for lambda in RATES {
            for s in S_GRID {
                t.record(
                    exact_laplace_m_pair(g, lambda, s, u, v)?,
                    laplace_m_from_n(&jumps, lambda, s)?,
                );
            }
        }
    }
    Ok(t.finish())
}

fn pmf_check(graphs: &[Graph]) -> CheckResult {
    let mut t = Tally::new("jump_pmf_mass", TOL_PMF_MASS);
    for g in graphs {
        let pmf = exact_pmf_n(&meeting_chain(g), 2000);
        t.record(pmf.pmf.iter().sum::<f64>() + pmf.tail, 1.0);
    }
    t.finish()
}

fn ring_check(max_ring: usize) -> Result<CheckResult> {
    let mut t = Tally::new("ring_closed_form_vs_recursions", TOL_CLOSED_FORMS);
    for n in (4..=max_ring).step_by(2) {
        let chain = meeting_chain(&build_ring(n)?);
        for s in S_GRID {
            let closed = laplace_n_ring(n, s)?;
            t.record(closed, ring_recursion_solve(n, s)?);
            t.record(closed, ring_recursion_solve_q(n, s)?);
            t.record(closed, laplace_n_generic(&chain, s)?);
        }
    }
    Ok(t.finish())
}

fn bipartite_check() -> Result<CheckResult> {
    let mut t = Tally::new("bipartite_closed_form_vs_linear_solve", TOL_CLOSED_FORMS);
    for (m, n) in [(1, 5), (2, 6), (3, 9)] {
        let chain = meeting_chain(&build_bipartite(m, n)?);
        for s in S_GRID {
            t.record(laplace_n_bipartite(m, n, s), laplace_n_generic(&chain, s)?);
        }
    }
    Ok(t.finish())
}

fn hand_value_checks() -> Result<(CheckResult, CheckResult)> {
    // α = e^{-s}/2 = 0.4 on the 4-cycle gives C_1 = 0.4/(1 - 0.4·0.8) = 10/17
    let mut hand = Tally::new("ring4_hand_value", TOL_HAND_VALUE);
    let s = -(0.8f64).ln();
    hand.record(laplace_n_ring(4, s)?, 10.0 / 17.0);
    hand.record(ring_recursion_solve(4, s)?, 10.0 / 17.0);
    hand.record(ring_recursion_solve_q(4, s)?, 10.0 / 17.0);

    // Q_j = x1^{j+1} + x2^{j+1} where x1, x2 solve x² − x + α² = 0
    let mut q = Tally::new("ring_q_power_sums", TOL_HAND_VALUE);
    for alpha in [0.05f64, 0.2, 0.4, 0.49] {
        let d = (1.0 - 4.0 * alpha * alpha).sqrt();
        let (x1, x2) = ((1.0 + d) / 2.0, (1.0 - d) / 2.0);
        for (j, qj) in ring_q_polynomials(alpha, 10).into_iter().enumerate() {
            q.record(qj, x1.powi(j as i32 + 1) + x2.powi(j as i32 + 1));
        }
    }
    Ok((hand.finish(), q.finish()))
}

pub fn oracle_suite(scope: Scope) -> Result<VerifyReport> {
    let graphs = family_graphs(scope.max_n())?;
    let (joint, routes) = epidemic_checks(&graphs)?;
    let (hand, q) = hand_value_checks()?;
    let checks = vec![
        joint,
        routes,
        ring_check(scope.max_ring())?,
        bipartite_check()?,
        hand,
        q,
        meeting_check(&graphs)?,
        pmf_check(&graphs),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { scope, checks, passed })
}

/// Writes the JSON report and returns whether every check passed.
pub fn write(scope: Scope, header: &Header, out: &mut dyn Write) -> Result<bool> {
    let report = oracle_suite(scope)?;
    serde_json::to_writer_pretty(&mut *out, &serde_json::json!({ "header": header, "report": report }))?;
    writeln!(out)?;
    Ok(report.passed)
}
