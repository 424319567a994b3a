//! Acceptance gate. Each test prints exactly one `acceptance <id> PASS|FAIL`
//! line (bypassing output capture) and then asserts on it.

use std::io::Write;
use std::sync::OnceLock;

use clap::Parser;

use eoe_cli::{oracle_suite, Cli, Scope, VerifyReport};
use eoe_core::asymptotics::{convergence_check, divergence_probe, schedule_by_name, LimitLaw, Metric, Trend};
use eoe_core::graph::{build_bipartite, build_complete, build_ring, Graph};
use eoe_core::oracle::exact_laplace_t_joint;
use eoe_core::sim::{run_batch, Engine, Execution, Simulator};

const TOL_EPIDEMIC: f64 = 1e-9;
const TOL_ROUTES: f64 = 1e-12;
const TOL_CLOSED_FORMS: f64 = 1e-10;
const TOL_HAND_VALUE: f64 = 1e-12;

const FIDELITY_REPS: u64 = 100_000;
const FIDELITY_Z: f64 = 3.0;
const FIDELITY_MIN_SHARE: f64 = 0.95;
const FIDELITY_S: [f64; 3] = [0.2, 1.0, 5.0];
const FIDELITY_RATES: [f64; 2] = [0.5, 2.0];

const LIMIT_REPS: u64 = 10_000;
const KS_MAX: f64 = 0.03;
const RING_TRANSFORM_MAX: f64 = 0.02;

const DIVERGENCE_REPS: u64 = 4_000;
const DIVERGENCE_REL_TOL: f64 = 0.20;

fn report(id: u8, title: &str, passed: bool, detail: String) {
    let line = format!(
        "\nacceptance {id:>2} {} {title}: {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(passed, "{line}");
}

fn full_suite() -> &'static VerifyReport {
    static SUITE: OnceLock<VerifyReport> = OnceLock::new();
    SUITE.get_or_init(|| oracle_suite(Scope::Full).expect("oracle suite runs"))
}

fn suite_line(id: u8, title: &str, checks: &[(&str, f64)]) {
    let mut passed = true;
    let mut parts = Vec::new();
    for &(name, tol) in checks {
        let c = full_suite().check(name).expect("check exists");
        let ok = c.cells > 0 && c.max_error <= tol;
        passed &= ok;
        parts.push(format!("{name} max err {:.2e} <= {tol:.0e} over {} cells", c.max_error, c.cells));
    }
    report(id, title, passed, parts.join("; "));
}

#[test]
fn acceptance_01_epidemic_transform_matches_joint_chain() {
    suite_line(
        1,
        "epidemic-time transform vs joint-chain oracle",
        &[("epidemic_transform_vs_joint_chain", TOL_EPIDEMIC)],
    );
}

#[test]
fn acceptance_02_transform_routes_agree() {
    suite_line(2, "transform via N equals transform via M", &[("transform_routes", TOL_ROUTES)]);
}

#[test]
fn acceptance_03_closed_forms_match_solves() {
    suite_line(
        3,
        "closed forms vs recursions and linear solves",
        &[
            ("ring_closed_form_vs_recursions", TOL_CLOSED_FORMS),
            ("bipartite_closed_form_vs_linear_solve", TOL_CLOSED_FORMS),
            ("ring4_hand_value", TOL_HAND_VALUE),
        ],
    );
}

fn fidelity_graphs() -> Vec<Graph> {
    let mut out = Vec::new();
    for n in 2..=6 {
        out.push(build_complete(n).unwrap());
    }
    for n in 3..=6 {
        out.push(build_bipartite(1, n).unwrap());
    }
    for n in 4..=6 {
        out.push(build_bipartite(2, n).unwrap());
    }
    for n in 4..=6 {
        out.push(build_ring(n).unwrap());
    }
    out
}

#[test]
fn acceptance_04_simulator_fidelity() {
    let graphs = fidelity_graphs();
    let mut details = Vec::new();
    let mut passed = true;
    for (k, engine) in [Engine::Event, Engine::Renewal].into_iter().enumerate() {
        let (mut cells, mut hits) = (0usize, 0usize);
        for (gi, g) in graphs.iter().enumerate() {
            for lambda in FIDELITY_RATES {
                for gamma in FIDELITY_RATES {
                    let sim = Simulator::new(g, lambda, gamma, 0, engine).unwrap();
                    let seed = 1000 * k as u64 + gi as u64;
                    let summary = run_batch(&sim, FIDELITY_REPS, seed, &FIDELITY_S, Execution::default()).unwrap();
                    for p in summary.transform_grid() {
                        let exact = exact_laplace_t_joint(g, lambda, gamma, p.s, 0).unwrap();
                        cells += 1;
                        if (p.value - exact).abs() <= FIDELITY_Z * p.std_error {
                            hits += 1;
                        }
                    }
                }
            }
        }
        let share = hits as f64 / cells as f64;
        passed &= share >= FIDELITY_MIN_SHARE;
        details.push(format!("{engine} {hits}/{cells} = {:.1}%", 100.0 * share));
    }
    report(
        4,
        "empirical transform within 3 SE of the oracle",
        passed,
        format!("{} (need >= {:.0}%, R = {FIDELITY_REPS})", details.join(", "), 100.0 * FIDELITY_MIN_SHARE),
    );
}

fn distances(rows: &[eoe_core::asymptotics::ConvergenceRow]) -> String {
    rows.iter()
        .map(|r| format!("n={} {:.4}", r.n, r.distance))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn acceptance_05_complete_fast_walk_limit() {
    let schedule = schedule_by_name("complete-i").unwrap();
    assert_eq!((schedule.lambda.exponent, schedule.gamma.exponent), (1.5, 0.0));
    let r = convergence_check(&schedule, &[50, 200, 1000], LIMIT_REPS, 5, Execution::default()).unwrap();
    assert_eq!((r.metric, r.law), (Metric::Ks, LimitLaw::Exp1));
    let nonincreasing = r.rows.windows(2).all(|w| w[1].distance <= w[0].distance);
    report(
        5,
        "complete graph, lambda = n^1.5: KS to Exp(1)",
        nonincreasing && r.final_distance() <= KS_MAX,
        format!("{} (nonincreasing: {nonincreasing}, final <= {KS_MAX})", distances(&r.rows)),
    );
}

#[test]
fn acceptance_06_complete_intermediate_limit() {
    let schedule = schedule_by_name("complete-iii").unwrap();
    assert_eq!(schedule.lambda.exponent, 0.5);
    let r = convergence_check(&schedule, &[1000], LIMIT_REPS, 6, Execution::default()).unwrap();
    assert_eq!(r.law, LimitLaw::Hypoexponential);
    report(
        6,
        "complete graph, lambda = n^0.5: KS to Exp(1) + Exp(2)",
        r.final_distance() <= KS_MAX,
        format!("{} (<= {KS_MAX})", distances(&r.rows)),
    );
}

#[test]
fn acceptance_07_star_limit() {
    let schedule = schedule_by_name("star").unwrap();
    let r = convergence_check(&schedule, &[100, 1000], LIMIT_REPS, 7, Execution::default()).unwrap();
    let b = r.rows.last().unwrap().b_n;
    // (5/2) γ²/λ at n = 1000
    assert!((b - 2.5 / 1000.0).abs() < 1e-15);
    report(
        7,
        "star, lambda = n: KS of (5/2)(gamma^2/lambda) T to Exp(1)",
        r.final_distance() <= KS_MAX,
        format!("{} (final <= {KS_MAX})", distances(&r.rows)),
    );
}

#[test]
fn acceptance_08_ring_limit() {
    let schedule = schedule_by_name("ring").unwrap();
    assert!((schedule.lambda_at(1000) - 1e4).abs() < 1e-6);
    let r = convergence_check(&schedule, &[1000], LIMIT_REPS, 8, Execution::default()).unwrap();
    assert_eq!(r.metric, Metric::TransformSup);
    report(
        8,
        "ring n = 1000, lambda = 1e4: sup transform distance",
        r.final_distance() <= RING_TRANSFORM_MAX,
        format!("{} (<= {RING_TRANSFORM_MAX})", distances(&r.rows)),
    );
}

#[test]
fn acceptance_09_divergence_probe() {
    let schedule = schedule_by_name("complete-i-divergent").unwrap();
    assert_eq!(schedule.lambda.exponent, 2.0);
    let r = divergence_probe(&schedule, &[50, 200, 800], DIVERGENCE_REPS, 9, Execution::default()).unwrap();
    let increasing = r.rows.windows(2).all(|w| w[1].median > w[0].median);
    let mut within = true;
    let mut parts = Vec::new();
    for row in &r.rows {
        let target = std::f64::consts::LN_2 * row.n as f64;
        let rel = row.median / target;
        within &= (rel - 1.0).abs() <= DIVERGENCE_REL_TOL;
        parts.push(format!("n={} median/(ln2 n) = {rel:.3}", row.n));
    }
    report(
        9,
        "complete graph, lambda = n^2: median T grows like ln2 n",
        increasing && within && r.median_trend == Trend::Growing,
        format!("{} (strictly increasing: {increasing}, tol {DIVERGENCE_REL_TOL})", parts.join(", ")),
    );
}

fn run_to_bytes(args: &[&str]) -> Vec<u8> {
    let cli = Cli::try_parse_from(std::iter::once("eoe").chain(args.iter().copied())).unwrap();
    let mut buf = Vec::new();
    eoe_cli::run(&cli, &mut buf).unwrap();
    buf
}

#[test]
fn acceptance_10_worker_count_determinism() {
    let mut parts = Vec::new();
    let mut passed = true;
    for (graph, engine) in [("ring:8", "event"), ("bipartite:2:7", "renewal"), ("complete:5", "event")] {
        let outs: Vec<Vec<u8>> = ["1", "8"]
            .iter()
            .map(|t| {
                run_to_bytes(&[
                    "simulate", "--graph", graph, "--lambda", "1.3", "--gamma", "0.4", "--reps", "5000", "--seed", "2024",
                    "--engine", engine, "--threads", t,
                ])
            })
            .collect();
        let same = outs[0] == outs[1] && !outs[0].is_empty();
        passed &= same;
        parts.push(format!("{graph}/{engine} {} bytes {}", outs[0].len(), if same { "identical" } else { "differ" }));
    }
    report(10, "CSV identical with 1 and 8 workers", passed, parts.join(", "));
}
