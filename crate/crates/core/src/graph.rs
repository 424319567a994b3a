//! Finite undirected graphs on which the two agents walk.
//!
//! Family constructors (complete, complete bipartite, ring) are trusted to be
//! edge-transitive. Graphs loaded from an edge list carry a caller-asserted
//! flag instead; no automorphism search is attempted.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid size for {family}: n = {n}, need n >= {min}")]
    InvalidSize {
        family: &'static str,
        n: usize,
        min: usize,
    },
    #[error("invalid partition: m = {m}, n = {n}, need 1 <= m < n")]
    InvalidPartition { m: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no edges")]
    Empty,
    #[error("bad graph spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },
    #[error("edge list {path}, line {line}: {reason}")]
    EdgeList {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which family a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Complete,
    /// `K_{m, n-m}`; `m` is the size of the first side.
    CompleteBipartite { m: usize },
    Ring,
    Generic,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::CompleteBipartite { .. } => "bipartite",
            Family::Ring => "ring",
            Family::Generic => "generic",
        }
    }
}

/// Undirected simple connected graph stored as compressed adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    family: Family,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    edge_transitive: bool,
}

impl Graph {
    fn from_adjacency(family: Family, adj: Vec<Vec<usize>>, edge_transitive: bool) -> Self {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(adj.iter().map(Vec::len).sum());
        offsets.push(0);
        for row in adj {
            neighbors.extend(row);
            offsets.push(neighbors.len());
        }
        Graph {
            n,
            family,
            offsets,
            neighbors,
            edge_transitive,
        }
    }

    /// Builds a graph from an explicit edge list (0-indexed vertices).
    ///
    /// Duplicate edges are merged. The vertex count is one more than the
    /// largest index seen. `edge_transitive` is recorded as given.
    pub fn from_edges(edges: &[(usize, usize)], edge_transitive: bool) -> Result<Self, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0) + 1;
        let mut sets = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        let adj: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let g = Graph::from_adjacency(Family::Generic, adj, edge_transitive);
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Reads a whitespace-separated `u v` edge list, one pair per line.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_edge_list_file(path: &Path, edge_transitive: bool) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| GraphError::EdgeList {
                path: path.to_path_buf(),
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(bad("expected exactly two vertex indices"));
            };
            let u = a.parse().map_err(|_| bad("vertex is not a non-negative integer"))?;
            let v = b.parse().map_err(|_| bad("vertex is not a non-negative integer"))?;
            edges.push((u, v));
        }
        Graph::from_edges(&edges, edge_transitive)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn is_edge_transitive(&self) -> bool {
        self.edge_transitive
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    /// The edge on which meeting-time computations start by default.
    pub fn first_edge(&self) -> (usize, usize) {
        self.edges().next().expect("connected graph with n >= 2 has an edge")
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Short descriptor in graph-spec syntax, e.g. `bipartite:2:6`.
    pub fn descriptor(&self) -> String {
        match self.family {
            Family::Complete => format!("complete:{}", self.n),
            Family::CompleteBipartite { m } => format!("bipartite:{m}:{}", self.n),
            Family::Ring => format!("ring:{}", self.n),
            Family::Generic => format!("generic(n={}, e={})", self.n, self.edge_count()),
        }
    }
}

/// The complete graph `K_n`.
pub fn build_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize {
            family: "complete",
            n,
            min: 2,
        });
    }
    let adj = (0..n)
        .map(|u| (0..n).filter(|&v| v != u).collect())
        .collect();
    Ok(Graph::from_adjacency(Family::Complete, adj, true))
}

/// The complete bipartite graph `K_{m, n-m}`. Vertices `0..m` form the first
/// side.
pub fn build_bipartite(m: usize, n: usize) -> Result<Graph, GraphError> {
    if m == 0 || m >= n {
        return Err(GraphError::InvalidPartition { m, n });
    }
    let adj = (0..n)
        .map(|u| if u < m { (m..n).collect() } else { (0..m).collect() })
        .collect();
    Ok(Graph::from_adjacency(
        Family::CompleteBipartite { m },
        adj,
        true,
    ))
}

/// The cycle `C_n`. Odd `n` is accepted; only the ring closed-form transform
/// needs `n` even.
pub fn build_ring(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidSize {
            family: "ring",
            n,
            min: 3,
        });
    }
    let adj = (0..n)
        .map(|u| {
            let mut v = vec![(u + n - 1) % n, (u + 1) % n];
            v.sort_unstable();
            v
        })
        .collect();
    Ok(Graph::from_adjacency(Family::Ring, adj, true))
}

/// Parsed form of the CLI graph strings `complete:n`, `bipartite:m:n`,
/// `ring:n` and `generic:<edge-list path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Complete(usize),
    Bipartite { m: usize, n: usize },
    Ring(usize),
    Generic(PathBuf),
}

impl GraphSpec {
    /// Builds the graph. Generic edge lists are marked edge-transitive by
    /// assertion.
    pub fn build(&self) -> Result<Graph, GraphError> {
        match self {
            GraphSpec::Complete(n) => build_complete(*n),
            GraphSpec::Bipartite { m, n } => build_bipartite(*m, *n),
            GraphSpec::Ring(n) => build_ring(*n),
            GraphSpec::Generic(path) => Graph::from_edge_list_file(path, true),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| GraphError::Spec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let num = |t: &str| -> Result<usize, GraphError> {
            t.trim()
                .parse()
                .map_err(|_| err(&format!("`{t}` is not a non-negative integer")))
        };
        let (kind, rest) = s.split_once(':').ok_or_else(|| err("expected `family:params`"))?;
        match kind.trim() {
            "complete" => Ok(GraphSpec::Complete(num(rest)?)),
            "ring" => Ok(GraphSpec::Ring(num(rest)?)),
            "bipartite" => {
                let (m, n) = rest
                    .split_once(':')
                    .ok_or_else(|| err("expected `bipartite:m:n`"))?;
                Ok(GraphSpec::Bipartite {
                    m: num(m)?,
                    n: num(n)?,
                })
            }
            "generic" if !rest.is_empty() => Ok(GraphSpec::Generic(PathBuf::from(rest))),
            "generic" => Err(err("missing edge-list path")),
            other => Err(err(&format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::Bipartite { m, n } => write!(f, "bipartite:{m}:{n}"),
            GraphSpec::Ring(n) => write!(f, "ring:{n}"),
            GraphSpec::Generic(p) => write!(f, "generic:{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_small_cases() {
        let g = build_complete(3).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!((0..3).all(|v| g.degree(v) == 2));
        let g = build_complete(2).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        let g = build_complete(10).unwrap();
        assert_eq!(g.edge_count(), 45);
        assert!((0..10).all(|v| g.degree(v) == 9));
        assert!(matches!(build_complete(1), Err(GraphError::InvalidSize { .. })));
    }

    #[test]
    fn bipartite_cases() {
        let star = build_bipartite(1, 5).unwrap();
        assert_eq!(star.degree(0), 4);
        assert!((1..5).all(|v| star.degree(v) == 1));
        assert_eq!(build_bipartite(2, 6).unwrap().edge_count(), 8);
        let g = build_bipartite(3, 6).unwrap();
        assert_eq!(g.edge_count(), 9);
        assert!((0..6).all(|v| g.degree(v) == 3));
        // no within-side edges
        assert!(!g.has_edge(0, 1) && !g.has_edge(3, 4) && g.has_edge(0, 3));
        assert!(matches!(build_bipartite(0, 4), Err(GraphError::InvalidPartition { .. })));
        assert!(matches!(build_bipartite(4, 4), Err(GraphError::InvalidPartition { .. })));
    }

    #[test]
    fn ring_cases() {
        let g = build_ring(4).unwrap();
        assert!((0..4).all(|v| g.degree(v) == 2));
        assert_eq!(g.edge_count(), 4);
        assert!(g.is_connected());
        assert!(build_ring(5).is_ok());
        assert!(matches!(build_ring(2), Err(GraphError::InvalidSize { .. })));
    }

    #[test]
    fn generic_edge_lists() {
        let g = Graph::from_edges(&[(0, 1), (1, 2), (2, 0), (1, 0)], false).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.family(), Family::Generic);
        assert!(!g.is_edge_transitive());
        assert!(matches!(Graph::from_edges(&[(0, 0)], true), Err(GraphError::SelfLoop(0))));
        assert!(matches!(
            Graph::from_edges(&[(0, 1), (2, 3)], true),
            Err(GraphError::Disconnected)
        ));
        assert!(matches!(Graph::from_edges(&[], true), Err(GraphError::Empty)));
    }

    #[test]
    fn spec_strings() {
        for s in ["complete:7", "bipartite:2:6", "ring:12", "generic:/tmp/x.txt"] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("torus:3".parse::<GraphSpec>().is_err());
        assert!("bipartite:3".parse::<GraphSpec>().is_err());
        assert!("ring:x".parse::<GraphSpec>().is_err());
        assert_eq!(
            "bipartite:2:6".parse::<GraphSpec>().unwrap().build().unwrap().descriptor(),
            "bipartite:2:6"
        );
    }

    #[test]
    fn edge_list_file() {
        let dir = std::env::temp_dir().join(format!("eoe-graph-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c5.txt");
        std::fs::write(&path, "# five-cycle\n0 1\n1 2\n2 3\n3 4\n4 0\n").unwrap();
        let g = Graph::from_edge_list_file(&path, true).unwrap();
        assert_eq!(g.n(), 5);
        assert!((0..5).all(|v| g.degree(v) == 2));
        std::fs::write(&path, "0 1\n1\n").unwrap();
        let err = Graph::from_edge_list_file(&path, true).unwrap_err();
        assert!(matches!(err, GraphError::EdgeList { line: 2, .. }));
        std::fs::remove_dir_all(&dir).ok();
    }
}
