//! Epidemic-on-edge model: two random walkers carrying an SIS infection on a
//! finite graph.
//!
//! The crate covers graph construction, Laplace transforms of the meeting
//! and extinction times (closed form and by linear solve), a brute-force
//! joint-chain oracle, Monte Carlo simulation, and scaling-limit checks.

// `!(x <= y)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod chain;
pub mod graph;
pub mod numeric;
pub mod oracle;
pub mod sim;
pub mod stats;
pub mod transforms;

pub use graph::{Family, Graph, GraphError, GraphSpec};
pub use transforms::{TransformError, TransformEvaluator};
