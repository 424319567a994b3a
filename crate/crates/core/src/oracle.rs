//! Ground truth on small graphs by linear algebra over full state spaces.
//!
//! Nothing here uses the transform identities in [`crate::transforms`]; the
//! joint walk + infection chain is built straight from the model's rates.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chain::{MeetingChain, MET};
use crate::graph::Graph;
use crate::numeric::solve_dense;

/// Largest enumerated joint state space the dense oracle accepts.
pub const MAX_JOINT_STATES: usize = 4000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("joint state space has {states} states, limit is {cap}")]
    TooLarge { states: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear system is singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Health {
    Susceptible,
    Infected,
}

use Health::{Infected as I, Susceptible as S};

/// Positions and health of both agents. Co-located agents never have mixed
/// health: a move that would create that state lands on `(I, I)` instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JointChainState {
    pub positions: (usize, usize),
    pub health: (Health, Health),
}

impl JointChainState {
    pub fn is_absorbing(&self) -> bool {
        self.health == (S, S)
    }

    pub fn infected(&self) -> usize {
        [self.health.0, self.health.1].iter().filter(|&&h| h == I).count()
    }

    /// Applies instant infection on co-location.
    fn settle(mut self) -> Self {
        if self.positions.0 == self.positions.1 && self.health != (S, S) {
            self.health = (I, I);
        }
        self
    }
}

/// Outgoing rates of one joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRow {
    /// `(target state index, rate)`; self-loops from undone recoveries are
    /// kept so that `exit_rate` equals the raw clock total.
    pub transitions: Vec<(usize, f64)>,
    pub exit_rate: f64,
}

/// The joint continuous-time chain of both agents.
#[derive(Debug, Clone)]
pub struct JointChain {
    states: Vec<JointChainState>,
    index: HashMap<JointChainState, usize>,
    rows: Vec<GeneratorRow>,
}

impl JointChain {
    pub fn build(g: &Graph, lambda: f64, gamma: f64) -> Result<Self, OracleError> {
        positive("lambda", lambda)?;
        positive("gamma", gamma)?;
        let n = g.n();
        let count = 4 * n * n - 2 * n;
        if count > MAX_JOINT_STATES {
            return Err(OracleError::TooLarge {
                states: count,
                cap: MAX_JOINT_STATES,
            });
        }
        let mut states = Vec::with_capacity(count);
        for a in 0..n {
            for b in 0..n {
                let healths: &[(Health, Health)] = if a == b {
                    &[(I, I), (S, S)]
                } else {
                    &[(I, I), (I, S), (S, I), (S, S)]
                };
                for &health in healths {
                    states.push(JointChainState {
                        positions: (a, b),
                        health,
                    });
                }
            }
        }
        let index: HashMap<_, _> = states.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let rows = states
            .iter()
            .map(|x| {
                if x.is_absorbing() {
                    return GeneratorRow {
                        transitions: Vec::new(),
                        exit_rate: 0.0,
                    };
                }
                let (a, b) = x.positions;
                let mut transitions = Vec::new();
                for &c in g.neighbors(a) {
                    let y = JointChainState { positions: (c, b), ..*x }.settle();
                    transitions.push((index[&y], lambda / g.degree(a) as f64));
                }
                for &c in g.neighbors(b) {
                    let y = JointChainState { positions: (a, c), ..*x }.settle();
                    transitions.push((index[&y], lambda / g.degree(b) as f64));
                }
                if x.health.0 == I {
                    let y = JointChainState { health: (S, x.health.1), ..*x }.settle();
                    transitions.push((index[&y], gamma));
                }
                if x.health.1 == I {
                    let y = JointChainState { health: (x.health.0, S), ..*x }.settle();
                    transitions.push((index[&y], gamma));
                }
                GeneratorRow {
                    exit_rate: transitions.iter().map(|&(_, r)| r).sum(),
                    transitions,
                }
            })
            .collect();
        Ok(JointChain { states, index, rows })
    }

    pub fn states(&self) -> &[JointChainState] {
        &self.states
    }

    pub fn row(&self, i: usize) -> &GeneratorRow {
        &self.rows[i]
    }

    pub fn index_of(&self, x: &JointChainState) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Solves `(q_x + s) φ(x) − Σ_y r(x,y) φ(y) = Σ_{y absorbing} r(x,y) · absorb_value
    /// + extra` over transient states and returns `φ` indexed like `states`.
    fn solve(&self, s: f64, absorb_value: f64, extra: f64) -> Result<Vec<f64>, OracleError> {
        let transient: Vec<usize> = (0..self.states.len())
            .filter(|&i| !self.states[i].is_absorbing())
            .collect();
        let mut pos = vec![usize::MAX; self.states.len()];
        for (k, &i) in transient.iter().enumerate() {
            pos[i] = k;
        }
        let t = transient.len();
        let mut a = DMatrix::zeros(t, t);
        let mut rhs = vec![extra; t];
        for (k, &i) in transient.iter().enumerate() {
            let row = &self.rows[i];
            a[(k, k)] += row.exit_rate + s;
            for &(j, r) in &row.transitions {
                if self.states[j].is_absorbing() {
                    rhs[k] += r * absorb_value;
                } else {
                    a[(k, pos[j])] -= r;
                }
            }
        }
        let x = solve_dense(a, &[rhs]).ok_or(OracleError::Singular)?;
        let mut phi = vec![absorb_value; self.states.len()];
        for (k, &i) in transient.iter().enumerate() {
            phi[i] = x[0][k];
        }
        Ok(phi)
    }

    fn start_index(&self, start: usize) -> Result<usize, OracleError> {
        self.index_of(&JointChainState {
            positions: (start, start),
            health: (I, I),
        })
        .ok_or_else(|| OracleError::InvalidArgument(format!("start vertex {start} out of range")))
    }
}

fn positive(name: &str, x: f64) -> Result<(), OracleError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(OracleError::InvalidArgument(format!("{name} must be positive, got {x}")))
    }
}

/// `E[e^{−sT}]` from the joint chain, both agents infected and co-located at
/// `start`.
pub fn exact_laplace_t_joint(g: &Graph, lambda: f64, gamma: f64, s: f64, start: usize) -> Result<f64, OracleError> {
    positive("s", s)?;
    let chain = JointChain::build(g, lambda, gamma)?;
    let k = chain.start_index(start)?;
    Ok(chain.solve(s, 1.0, 0.0)?[k])
}

/// `E[T]` from the joint chain (expected absorption time).
pub fn exact_mean_t_joint(g: &Graph, lambda: f64, gamma: f64, start: usize) -> Result<f64, OracleError> {
    let chain = JointChain::build(g, lambda, gamma)?;
    let k = chain.start_index(start)?;
    Ok(chain.solve(0.0, 0.0, 1.0)?[k])
}

/// First-passage transform to the diagonal for walkers started at `i ≠ j`,
/// each jumping at rate `λ`.
pub fn exact_laplace_m_pair(g: &Graph, lambda: f64, s: f64, i: usize, j: usize) -> Result<f64, OracleError> {
    positive("lambda", lambda)?;
    if !(s >= 0.0) {
        return Err(OracleError::InvalidArgument(format!("s must be >= 0, got {s}")));
    }
    let n = g.n();
    if i == j || i >= n || j >= n {
        return Err(OracleError::InvalidArgument(format!(
            "need distinct vertices below {n}, got ({i}, {j})"
        )));
    }
    // ordered off-diagonal pairs
    let idx = |a: usize, b: usize| a * n + b - if b > a { a + 1 } else { a };
    let t = n * (n - 1);
    let mut a = DMatrix::zeros(t, t);
    let mut rhs = vec![0.0; t];
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let k = idx(u, v);
            a[(k, k)] += 2.0 * lambda + s;
            for (mover, other, first) in [(u, v, true), (v, u, false)] {
                let r = lambda / g.degree(mover) as f64;
                for &x in g.neighbors(mover) {
                    if x == other {
                        rhs[k] += r;
                    } else {
                        let target = if first { idx(x, other) } else { idx(other, x) };
                        a[(k, target)] -= r;
                    }
                }
            }
        }
    }
    let x = solve_dense(a, &[rhs]).ok_or(OracleError::Singular)?;
    Ok(x[0][idx(i, j)])
}

/// `P(N = k)` for `k = 1..=k_max` plus the mass not yet absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpCountPmf {
    /// `pmf[k − 1] = P(N = k)`.
    pub pmf: Vec<f64>,
    pub tail: f64,
}

impl JumpCountPmf {
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.pmf.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// `Σ k P(N = k)` over the computed range (a lower bound on `E[N]`).
    pub fn truncated_mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(k, p)| (k + 1) as f64 * p)
            .sum()
    }
}

/// Distribution of the number of jumps to absorption, by kernel powering.
pub fn exact_pmf_n(chain: &MeetingChain, k_max: usize) -> JumpCountPmf {
    let mut dist = vec![0.0; chain.len()];
    dist[chain.start()] = 1.0;
    let mut pmf = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        let next = chain.step(&dist);
        // MET keeps its old mass; only the new arrivals count
        pmf.push(next[MET] - dist[MET]);
        dist = next;
    }
    let tail = dist
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != MET)
        .map(|(_, &p)| p)
        .sum();
    JumpCountPmf { pmf, tail }
}

fn check_even_ring(n: usize, s: f64) -> Result<(), OracleError> {
    if n < 4 || n % 2 == 1 {
        return Err(OracleError::InvalidArgument(format!("need even n >= 4, got {n}")));
    }
    positive("s", s)
}

/// Ring `L_N` by the backward coefficient recursion
/// `C_{n/2} = 2α`, `C_i = α / (1 − α C_{i+1})`; returns `C_1`.
pub fn ring_recursion_solve(n: usize, s: f64) -> Result<f64, OracleError> {
    check_even_ring(n, s)?;
    let alpha = 0.5 * (-s).exp();
    let mut c = 2.0 * alpha;
    for _ in 1..n / 2 {
        c = alpha / (1.0 - alpha * c);
    }
    Ok(c)
}

/// `Q_0 = 1`, `Q_1 = 1 − 2α²`, `Q_j = Q_{j−1} − α² Q_{j−2}` for `j ≤ j_max`.
pub fn ring_q_polynomials(alpha: f64, j_max: usize) -> Vec<f64> {
    let a2 = alpha * alpha;
    let mut q = vec![1.0, 1.0 - 2.0 * a2];
    for j in 2..=j_max {
        q.push(q[j - 1] - a2 * q[j - 2]);
    }
    q.truncate(j_max + 1);
    q
}

/// Ring `L_N` through the second-order recurrence: `C_1 = α Q_{n/2−2} / Q_{n/2−1}`.
pub fn ring_recursion_solve_q(n: usize, s: f64) -> Result<f64, OracleError> {
    check_even_ring(n, s)?;
    let alpha = 0.5 * (-s).exp();
    let half = n / 2;
    let q = ring_q_polynomials(alpha, half - 1);
    Ok(alpha * q[half - 2] / q[half - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{bipartite_chain, complete_chain, meeting_chain};
    use crate::graph::{build_complete, build_ring};

    #[test]
    fn generator_rows_have_expected_exit_rates() {
        let g = build_ring(5).unwrap();
        let chain = JointChain::build(&g, 1.5, 0.25).unwrap();
        for (i, x) in chain.states().iter().enumerate() {
            let row = chain.row(i);
            if x.is_absorbing() {
                assert_eq!(row.exit_rate, 0.0);
            } else {
                let want = 3.0 + 0.25 * x.infected() as f64;
                assert!((row.exit_rate - want).abs() < 1e-14);
                assert!(row.transitions.iter().all(|&(_, r)| r >= 0.0));
            }
            // no co-located mixed state exists
            if x.positions.0 == x.positions.1 {
                assert!(x.health == (I, I) || x.health == (S, S));
            }
        }
    }

    #[test]
    fn frozen_joint_values() {
        let k3 = build_complete(3).unwrap();
        assert!((exact_laplace_t_joint(&k3, 1.0, 1.0, 1.0, 0).unwrap() - 2.0 / 13.0).abs() < 1e-13);
        let k2 = build_complete(2).unwrap();
        assert!((exact_laplace_t_joint(&k2, 1.0, 1.0, 1.0, 1).unwrap() - 1.0 / 9.0).abs() < 1e-13);
        let c6 = build_ring(6).unwrap();
        let v = exact_laplace_t_joint(&c6, 2.0, 0.5, 1.0, 0).unwrap();
        assert!((v - 0.087_146_470_452_977_7).abs() < 1e-13);
    }

    #[test]
    fn fast_recovery_trend() {
        // co-located recoveries are undone, so T ≈ J* + max(R1, R2)
        let g = build_complete(3).unwrap();
        let (lambda, s) = (1.0, 1.0);
        for gamma in [1e2, 1e4, 1e6] {
            let v = exact_laplace_t_joint(&g, lambda, gamma, s, 0).unwrap();
            let target = 2.0 * lambda / (s + 2.0 * lambda) * 2.0 * gamma * gamma / ((s + gamma) * (s + 2.0 * gamma));
            assert!((v - target).abs() < 2.0 / gamma, "{gamma}: {v} vs {target}");
        }
        let mean = exact_mean_t_joint(&g, 0.01, 100.0, 0).unwrap();
        assert!((mean - (50.0 + 0.015)).abs() < 0.01, "{mean}");
    }

    #[test]
    fn small_s_limit() {
        let g = build_ring(4).unwrap();
        let v = exact_laplace_t_joint(&g, 1.0, 1.0, 1e-9, 2).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn too_large_is_rejected() {
        let g = build_ring(40).unwrap();
        assert!(matches!(
            JointChain::build(&g, 1.0, 1.0),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn pair_meeting_on_complete_graph() {
        for n in [2usize, 3, 5, 8] {
            let g = build_complete(n).unwrap();
            for (lambda, s) in [(1.0, 0.5), (2.5, 3.0)] {
                let want = 2.0 * lambda / (2.0 * lambda + (n - 1) as f64 * s);
                let got = exact_laplace_m_pair(&g, lambda, s, 0, 1).unwrap();
                assert!((got - want).abs() < 1e-13, "n={n}");
            }
        }
    }

    #[test]
    fn pair_meeting_is_edge_independent_on_cycle() {
        let g = build_ring(6).unwrap();
        let first = exact_laplace_m_pair(&g, 1.3, 0.7, 0, 1).unwrap();
        for (u, v) in g.edges() {
            let x = exact_laplace_m_pair(&g, 1.3, 0.7, v, u).unwrap();
            assert!((x - first).abs() < 1e-13);
        }
    }

    #[test]
    fn pmf_cases() {
        let p = exact_pmf_n(&bipartite_chain(2, 6), 40);
        assert!((p.prob(1) - 0.375).abs() < 1e-15);
        assert_eq!(p.prob(2), 0.0);
        let p = exact_pmf_n(&complete_chain(3), 30);
        for k in 1..=30 {
            assert!((p.prob(k) - 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
        let chain = meeting_chain(&build_ring(10).unwrap());
        let p = exact_pmf_n(&chain, 100);
        assert!((p.pmf.iter().sum::<f64>() + p.tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ring_recursions() {
        let s = -(0.8f64.ln());
        assert!((ring_recursion_solve(4, s).unwrap() - 10.0 / 17.0).abs() < 1e-15);
        assert!((ring_recursion_solve_q(4, s).unwrap() - 10.0 / 17.0).abs() < 1e-15);
        for s in [0.05, 0.7, 3.0] {
            let aux = crate::transforms::RingAux::new(s);
            let q = ring_q_polynomials(aux.alpha, 10);
            for (j, qj) in q.iter().enumerate() {
                let closed = aux.x1.powi(j as i32 + 1) + aux.x2.powi(j as i32 + 1);
                assert!((qj - closed).abs() < 1e-12);
            }
        }
        assert!(ring_recursion_solve(7, 1.0).is_err());
    }
}
