//! Monte Carlo of the two-walker SIS process.
//!
//! Two engines draw from the same law:
//!
//! - [`Engine::Event`] races the exponential clocks on actual vertex
//!   positions, one event at a time.
//! - [`Engine::Renewal`] exploits that the walkers ignore health: it only
//!   tracks meeting times of the walk and how many events fall in each
//!   health phase, then draws the phase durations as gamma variables. This
//!   makes large-`λ` sweeps affordable.
//!
//! Replication `r` under seed `s` always uses [`stream`]`(s, r)`.

mod batch;
mod event;
mod renewal;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

pub use batch::{run_batch, run_samples, Execution, SampleSummary, SummaryReport, TransformPoint};
pub use event::{EventObserver, EventSimulator};
pub use renewal::RenewalSimulator;

/// Event cap per replication.
pub const MAX_EVENTS: u64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation exceeded {events} events without ending")]
    Runaway { events: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One realisation of the extinction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicSample {
    pub t: f64,
    pub n_jumps: u64,
    /// Susceptible-to-infected transitions after time 0.
    pub n_reinfections: u64,
}

/// Meeting time and jump count from a given pair of vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeetingSample {
    pub m: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Event,
    Renewal,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Event => "event",
            Engine::Renewal => "renewal",
        })
    }
}

impl FromStr for Engine {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "event" => Ok(Engine::Event),
            "renewal" => Ok(Engine::Renewal),
            other => Err(SimError::InvalidArgument(format!(
                "unknown engine '{other}' (expected event or renewal)"
            ))),
        }
    }
}

/// The deterministic random stream of replication `rep`.
pub fn stream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn check_rate(name: &str, x: f64) -> Result<(), SimError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(SimError::InvalidArgument(format!("{name} must be positive and finite, got {x}")))
    }
}

fn check_vertex(g: &Graph, v: usize) -> Result<(), SimError> {
    if v < g.n() {
        Ok(())
    } else {
        Err(SimError::InvalidArgument(format!("vertex {v} out of range for n = {}", g.n())))
    }
}

/// A configured simulator for one `(graph, λ, γ, start)`.
#[derive(Debug, Clone)]
pub enum Simulator<'g> {
    Event(EventSimulator<'g>),
    Renewal(RenewalSimulator<'g>),
}

impl<'g> Simulator<'g> {
    pub fn new(g: &'g Graph, lambda: f64, gamma: f64, start: usize, engine: Engine) -> Result<Self, SimError> {
        Ok(match engine {
            Engine::Event => Simulator::Event(EventSimulator::new(g, lambda, gamma, start)?),
            Engine::Renewal => Simulator::Renewal(RenewalSimulator::new(g, lambda, gamma, start)?),
        })
    }

    pub fn engine(&self) -> Engine {
        match self {
            Simulator::Event(_) => Engine::Event,
            Simulator::Renewal(_) => Engine::Renewal,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EpidemicSample, SimError> {
        match self {
            Simulator::Event(s) => s.sample(rng),
            Simulator::Renewal(s) => s.sample(rng),
        }
    }

    /// Replication `rep` under `seed`.
    pub fn replicate(&self, seed: u64, rep: u64) -> Result<EpidemicSample, SimError> {
        self.sample(&mut stream(seed, rep))
    }
}

/// One sample of `T` by the event engine, from both agents infected at `start`.
pub fn simulate_eoe(g: &Graph, lambda: f64, gamma: f64, seed: u64, start: usize) -> Result<EpidemicSample, SimError> {
    EventSimulator::new(g, lambda, gamma, start)?.sample(&mut stream(seed, 0))
}

/// Walks two particles from `i` and `j` until they share a vertex.
pub fn simulate_meeting(g: &Graph, lambda: f64, seed: u64, i: usize, j: usize) -> Result<MeetingSample, SimError> {
    check_rate("lambda", lambda)?;
    check_vertex(g, i)?;
    check_vertex(g, j)?;
    if i == j {
        return Err(SimError::InvalidArgument("meeting needs two distinct start vertices".into()));
    }
    let mut rng = stream(seed, 0);
    let mut pos = [i, j];
    let mut m = 0.0;
    let mut n = 0u64;
    while pos[0] != pos[1] {
        if n >= MAX_EVENTS {
            return Err(SimError::Runaway { events: n });
        }
        let x: f64 = rng.sample(Exp1);
        m += x / (2.0 * lambda);
        let w = usize::from(rng.random::<bool>());
        let nb = g.neighbors(pos[w]);
        pos[w] = nb[rng.random_range(0..nb.len())];
        n += 1;
    }
    Ok(MeetingSample { m, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_ring};
    use rand::RngCore;

    #[test]
    fn streams_are_distinct_and_repeatable() {
        let a = stream(7, 0).next_u64();
        assert_eq!(a, stream(7, 0).next_u64());
        assert_ne!(a, stream(7, 1).next_u64());
        assert_ne!(a, stream(8, 0).next_u64());
    }

    #[test]
    fn engine_parsing() {
        assert_eq!("renewal".parse::<Engine>().unwrap(), Engine::Renewal);
        assert_eq!(Engine::Event.to_string(), "event");
        assert!("gillespie".parse::<Engine>().is_err());
    }

    #[test]
    fn meeting_on_k2_takes_one_jump() {
        let g = build_complete(2).unwrap();
        for seed in 0..20 {
            let s = simulate_meeting(&g, 3.0, seed, 0, 1).unwrap();
            assert_eq!(s.n, 1);
            assert!(s.m > 0.0);
        }
    }

    #[test]
    fn bad_arguments() {
        let g = build_ring(5).unwrap();
        assert!(simulate_meeting(&g, 1.0, 0, 2, 2).is_err());
        assert!(simulate_meeting(&g, 0.0, 0, 1, 2).is_err());
        assert!(simulate_eoe(&g, 1.0, -1.0, 0, 0).is_err());
        assert!(simulate_eoe(&g, 1.0, 1.0, 0, 9).is_err());
    }
}
