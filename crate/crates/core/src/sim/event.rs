use rand::Rng;
use rand_distr::Exp1;

use super::{check_rate, check_vertex, EpidemicSample, SimError, MAX_EVENTS};
use crate::graph::Graph;

/// Called once per event with the holding time and the total clock rate it
/// was drawn from.
pub trait EventObserver {
    fn on_event(&mut self, dt: f64, total_rate: f64);
}

impl EventObserver for () {
    #[inline]
    fn on_event(&mut self, _: f64, _: f64) {}
}

impl<F: FnMut(f64, f64)> EventObserver for F {
    fn on_event(&mut self, dt: f64, total_rate: f64) {
        self(dt, total_rate)
    }
}

/// Competing-clock simulation on vertex positions.
///
/// Each event draws one `Exp(total)` holding time and then picks the clock
/// that rang in proportion to its rate.
#[derive(Debug, Clone)]
pub struct EventSimulator<'g> {
    graph: &'g Graph,
    lambda: f64,
    gamma: f64,
    start: usize,
}

impl<'g> EventSimulator<'g> {
    pub fn new(graph: &'g Graph, lambda: f64, gamma: f64, start: usize) -> Result<Self, SimError> {
        check_rate("lambda", lambda)?;
        check_rate("gamma", gamma)?;
        check_vertex(graph, start)?;
        Ok(EventSimulator {
            graph,
            lambda,
            gamma,
            start,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EpidemicSample, SimError> {
        self.sample_observed(rng, &mut ())
    }

    pub fn sample_observed<R: Rng + ?Sized, O: EventObserver>(
        &self,
        rng: &mut R,
        observer: &mut O,
    ) -> Result<EpidemicSample, SimError> {
        let (lambda, gamma) = (self.lambda, self.gamma);
        let mut pos = [self.start; 2];
        let mut infected = [true; 2];
        let mut t = 0.0;
        let mut n_jumps = 0u64;
        let mut n_reinfections = 0u64;
        let mut events = 0u64;
        loop {
            let n_inf = infected.iter().filter(|&&x| x).count();
            if n_inf == 0 {
                break;
            }
            if events == MAX_EVENTS {
                return Err(SimError::Runaway { events });
            }
            events += 1;
            let total = 2.0 * lambda + n_inf as f64 * gamma;
            let e: f64 = rng.sample(Exp1);
            let dt = e / total;
            t += dt;
            observer.on_event(dt, total);

            let u = rng.random::<f64>() * total;
            if u < 2.0 * lambda {
                let w = usize::from(u >= lambda);
                let nb = self.graph.neighbors(pos[w]);
                pos[w] = nb[rng.random_range(0..nb.len())];
                n_jumps += 1;
                if pos[0] == pos[1] && infected[0] != infected[1] {
                    infected = [true; 2];
                    n_reinfections += 1;
                }
            } else {
                let who = if n_inf == 2 {
                    usize::from(u - 2.0 * lambda >= gamma)
                } else {
                    usize::from(infected[1])
                };
                // a co-located partner reinfects at once: nothing changes
                if !(pos[0] == pos[1] && infected[1 - who]) {
                    infected[who] = false;
                }
            }
        }
        Ok(EpidemicSample {
            t,
            n_jumps,
            n_reinfections,
        })
    }
}
