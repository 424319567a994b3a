//! Embedded jump chain of the two walkers' relative configuration.
//!
//! Each step is one jump of the pair: the two exponential jump clocks race
//! evenly, so a step picks either walker with probability ½ and moves it to a
//! uniform neighbour. The chain is absorbed in `Met`. Family graphs reduce to
//! a handful of distance classes; any graph can use the full unordered-pair
//! chain.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::graph::{Family, Graph};
use crate::numeric::{solve_dense, solve_tridiagonal};

/// A configuration class of the two walkers. State index 0 is always `Met`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainState {
    Met,
    /// Graph distance between the walkers (complete: always 1; bipartite: 1
    /// or 2; ring: 1..=n/2).
    Distance(usize),
    /// Unordered vertex pair `(u, v)` with `u < v`.
    Pair(usize, usize),
}

/// How the chain was reduced, which also selects closed forms and samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Complete { n: usize },
    Bipartite { m: usize, n: usize },
    Ring { n: usize },
    Pair,
}

/// Row-stochastic kernel over configuration classes with an absorbing `Met`
/// state at index 0.
#[derive(Debug, Clone)]
pub struct MeetingChain {
    kind: ChainKind,
    states: Vec<ChainState>,
    rows: Vec<Vec<(usize, f64)>>,
    start: usize,
}

pub const MET: usize = 0;

impl MeetingChain {
    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn states(&self) -> &[ChainState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Sparse row `i` as `(target, probability)` pairs.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn index_of(&self, state: ChainState) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Same kernel, different start state.
    pub fn with_start(mut self, start: usize) -> Self {
        assert!(start < self.states.len() && start != MET, "start must be transient");
        self.start = start;
        self
    }

    /// One step of the kernel applied to a distribution (row vector).
    pub fn step(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(j, w) in &self.rows[i] {
                out[j] += p * w;
            }
        }
        out
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|&(_, w)| w).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// True when every transition changes the state index by at most one,
    /// i.e. the transient block is tridiagonal.
    pub fn is_tridiagonal(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().all(|&(j, _)| i.abs_diff(j) <= 1))
    }

    /// Expected number of steps to absorption from the start state, from
    /// `(I − P_TT) x = 1`. `None` if some state cannot reach `Met`.
    pub fn mean_absorption_steps(&self) -> Option<f64> {
        let t = self.len() - 1;
        let ones = vec![1.0; t];
        let x = if self.is_tridiagonal() {
            let (mut lower, mut diag, mut upper) = (vec![0.0; t], vec![1.0; t], vec![0.0; t]);
            for i in 0..t {
                for &(j, w) in &self.rows[i + 1] {
                    if j == MET {
                        continue;
                    }
                    match (j - 1).cmp(&i) {
                        std::cmp::Ordering::Less => lower[i] -= w,
                        std::cmp::Ordering::Equal => diag[i] -= w,
                        std::cmp::Ordering::Greater => upper[i] -= w,
                    }
                }
            }
            solve_tridiagonal(&lower, &diag, &upper, &[ones])?
        } else {
            let mut a = DMatrix::identity(t, t);
            for i in 0..t {
                for &(j, w) in &self.rows[i + 1] {
                    if j != MET {
                        a[(i, j - 1)] -= w;
                    }
                }
            }
            solve_dense(a, &[ones])?
        };
        let mean = x[0][self.start - 1];
        (mean.is_finite() && mean > 0.0).then_some(mean)
    }

    /// Per-step meeting probability from the distance-one class when it is a
    /// constant of the family (complete and bipartite chains).
    pub fn meet_probability(&self) -> Option<f64> {
        match self.kind {
            ChainKind::Complete { n } => Some(1.0 / (n - 1) as f64),
            ChainKind::Bipartite { m, n } => Some(bipartite_meet_probability(m, n)),
            _ => None,
        }
    }
}

/// `½(1/m + 1/(n−m))`: a jump from distance one lands on the other walker.
pub fn bipartite_meet_probability(m: usize, n: usize) -> f64 {
    0.5 * (1.0 / m as f64 + 1.0 / (n - m) as f64)
}

/// The reduced meeting chain for a family graph, or the full pair chain for a
/// generic one.
pub fn meeting_chain(g: &Graph) -> MeetingChain {
    match g.family() {
        Family::Complete => complete_chain(g.n()),
        Family::CompleteBipartite { m } => bipartite_chain(m, g.n()),
        Family::Ring => ring_chain(g.n()),
        Family::Generic => pair_chain(g, g.first_edge()),
    }
}

pub fn complete_chain(n: usize) -> MeetingChain {
    assert!(n >= 2);
    let p = 1.0 / (n - 1) as f64;
    let mut apart = vec![(MET, p)];
    if p < 1.0 {
        apart.push((1, 1.0 - p));
    }
    MeetingChain {
        kind: ChainKind::Complete { n },
        states: vec![ChainState::Met, ChainState::Distance(1)],
        rows: vec![vec![(MET, 1.0)], apart],
        start: 1,
    }
}

pub fn bipartite_chain(m: usize, n: usize) -> MeetingChain {
    assert!(m >= 1 && m < n);
    let q = bipartite_meet_probability(m, n);
    let mut d1 = vec![(MET, q)];
    if q < 1.0 {
        d1.push((2, 1.0 - q));
    }
    MeetingChain {
        kind: ChainKind::Bipartite { m, n },
        states: vec![ChainState::Met, ChainState::Distance(1), ChainState::Distance(2)],
        rows: vec![vec![(MET, 1.0)], d1, vec![(1, 1.0)]],
        start: 1,
    }
}

/// Distance chain on `C_n`. State index equals the distance.
pub fn ring_chain(n: usize) -> MeetingChain {
    assert!(n >= 3);
    let top = n / 2;
    let mut states = vec![ChainState::Met];
    let mut rows = vec![vec![(MET, 1.0)]];
    for d in 1..=top {
        states.push(ChainState::Distance(d));
        let row = if d < top {
            vec![(d - 1, 0.5), (d + 1, 0.5)]
        } else if n.is_multiple_of(2) {
            // antipodal: both directions shrink the distance
            vec![(d - 1, 1.0)]
        } else {
            vec![(d - 1, 0.5), (d, 0.5)]
        };
        rows.push(row);
    }
    MeetingChain {
        kind: ChainKind::Ring { n },
        states,
        rows,
        start: 1,
    }
}

/// Full chain on unordered vertex pairs, started from the pair `start`
/// (which must be an edge for `N` to mean "meeting from distance one").
pub fn pair_chain(g: &Graph, start: (usize, usize)) -> MeetingChain {
    let n = g.n();
    let key = |u: usize, v: usize| if u < v { (u, v) } else { (v, u) };
    let mut states = vec![ChainState::Met];
    let mut index = HashMap::new();
    for u in 0..n {
        for v in (u + 1)..n {
            index.insert((u, v), states.len());
            states.push(ChainState::Pair(u, v));
        }
    }
    let mut rows = vec![vec![(MET, 1.0)]];
    for &st in &states[1..] {
        let ChainState::Pair(u, v) = st else { unreachable!() };
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (mover, other) in [(u, v), (v, u)] {
            let w = 0.5 / g.degree(mover) as f64;
            for &x in g.neighbors(mover) {
                let target = if x == other { MET } else { index[&key(x, other)] };
                *acc.entry(target).or_default() += w;
            }
        }
        let mut row: Vec<(usize, f64)> = acc.into_iter().collect();
        row.sort_unstable_by_key(|&(j, _)| j);
        rows.push(row);
    }
    let (a, b) = start;
    assert!(a != b, "start pair must be two distinct vertices");
    MeetingChain {
        kind: ChainKind::Pair,
        states,
        rows,
        start: index[&key(a, b)],
    }
}
