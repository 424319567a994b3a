//! Phase-counting engine.
//!
//! The process alternates between three health phases: co-located `(I, I)`
//! (only the separating jump matters, rate `2λ`), apart with two infected
//! (all events at rate `2λ + 2γ`) and apart with one infected (`2λ + γ`).
//! Every event in a phase has the same holding-time law, so `T` is a sum of
//! three gamma variables whose shapes are the phase event counts. Those
//! counts depend only on the walk's meeting steps and the independent coin
//! "jump or recovery", which the samplers below draw without tracking time.

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, Gamma, Geometric};

use super::{check_rate, check_vertex, EpidemicSample, SimError, MAX_EVENTS};
use crate::graph::{Family, Graph};

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    colocated: u64,
    apart2: u64,
    apart1: u64,
    jumps: u64,
    reinfections: u64,
}

impl Counts {
    /// Logical events represented, not work done.
    fn events(&self) -> u64 {
        self.colocated + self.apart2 + self.apart1
    }

    fn add_apart(&mut self, k: u8, events: u64) {
        if k == 2 {
            self.apart2 += events;
        } else {
            self.apart1 += events;
        }
    }
}

fn gamma_sum<R: Rng + ?Sized>(rng: &mut R, shape: u64, rate: f64) -> f64 {
    if shape == 0 {
        return 0.0;
    }
    Gamma::new(shape as f64, 1.0 / rate)
        .expect("positive shape and rate")
        .sample(rng)
}

fn geometric(p: f64) -> Geometric {
    Geometric::new(p.clamp(f64::MIN_POSITIVE, 1.0)).expect("probability in (0, 1]")
}

/// Samples `T` from phase event counts.
#[derive(Debug, Clone)]
pub struct RenewalSimulator<'g> {
    graph: &'g Graph,
    lambda: f64,
    gamma: f64,
    start: usize,
    model: Model,
}

#[derive(Debug, Clone)]
enum Model {
    Rounds(Rounds),
    Walk(WalkModel),
}

impl<'g> RenewalSimulator<'g> {
    pub fn new(graph: &'g Graph, lambda: f64, gamma: f64, start: usize) -> Result<Self, SimError> {
        check_rate("lambda", lambda)?;
        check_rate("gamma", gamma)?;
        check_vertex(graph, start)?;
        let r2 = 2.0 * gamma / (2.0 * lambda + 2.0 * gamma);
        let r1 = gamma / (2.0 * lambda + gamma);
        let model = match graph.family() {
            Family::Complete => Model::Rounds(Rounds::new(1.0 / (graph.n() - 1) as f64, false, r2, r1)),
            Family::CompleteBipartite { m } => {
                let q = crate::chain::bipartite_meet_probability(m, graph.n());
                Model::Rounds(Rounds::new(q, true, r2, r1))
            }
            Family::Ring | Family::Generic => Model::Walk(WalkModel {
                budget2: geometric(r2),
                budget1: geometric(r1),
            }),
        };
        Ok(RenewalSimulator {
            graph,
            lambda,
            gamma,
            start,
            model,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EpidemicSample, SimError> {
        let counts = match &self.model {
            Model::Rounds(r) => r.run(rng)?,
            Model::Walk(w) => match self.graph.family() {
                Family::Ring => w.run(&mut RingWalk::new(self.graph.n()), rng)?,
                _ => w.run(&mut PairWalk::new(self.graph, self.start), rng)?,
            },
        };
        let two_l = 2.0 * self.lambda;
        let t = gamma_sum(rng, counts.colocated, two_l)
            + gamma_sum(rng, counts.apart2, two_l + 2.0 * self.gamma)
            + gamma_sum(rng, counts.apart1, two_l + self.gamma);
        Ok(EpidemicSample {
            t,
            n_jumps: counts.jumps,
            n_reinfections: counts.reinfections,
        })
    }
}

/// Closed-form phase sampler for graphs whose apart configurations form at
/// most two classes: "adjacent" (a jump meets with probability `q`) and, for
/// bipartite graphs, "same side" (the next jump surely returns to adjacent).
///
/// From the adjacent class, one round is one of
/// A: recovery; B: meeting jump; C: (bipartite) jump away, then recovery;
/// D: a non-meeting excursion back to adjacent (1 jump, or 2 on a bipartite
/// graph). Rounds are i.i.d., so a phase needs a geometric number of
/// continuing rounds and one categorical terminal round.
#[derive(Debug, Clone)]
struct Rounds {
    excursion: u64,
    /// Phase with two infected: rounds B and D continue, A and C end it.
    cont2: Geometric,
    b_share2: f64,
    a_given_end2: f64,
    /// Phase with one infected: only D continues; B is a reinfection.
    cont1: Geometric,
    end1: [f64; 3],
    r1: f64,
}

enum PhaseEnd {
    Recovered,
    Reinfected,
}

impl Rounds {
    fn new(q: f64, bipartite: bool, r2: f64, r1: f64) -> Self {
        let (j2, j1) = (1.0 - r2, 1.0 - r1);
        let (a2, b2) = (r2, j2 * q);
        let (c2, d2) = if bipartite {
            (j2 * (1.0 - q) * r2, j2 * (1.0 - q) * j2)
        } else {
            (0.0, j2 * (1.0 - q))
        };
        let (a1, b1) = (r1, j1 * q);
        let c1 = if bipartite { j1 * (1.0 - q) * r1 } else { 0.0 };
        let end1 = a1 + b1 + c1;
        Rounds {
            excursion: if bipartite { 2 } else { 1 },
            cont2: geometric(a2 + c2),
            b_share2: b2 / (b2 + d2),
            a_given_end2: a2 / (a2 + c2),
            cont1: geometric(end1),
            end1: [a1 / end1, b1 / end1, c1 / end1],
            r1,
        }
    }

    fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Counts, SimError> {
        let mut c = Counts::default();
        for _ in 0..MAX_EVENTS {
            // separating jump, then the two-infected phase
            c.colocated += 1;
            c.jumps += 1;
            let g = self.cont2.sample(rng);
            let b = if g == 0 {
                0
            } else {
                Binomial::new(g, self.b_share2).expect("valid binomial").sample(rng)
            };
            let d = g - b;
            c.apart2 += b + self.excursion * d;
            c.colocated += b;
            c.jumps += 2 * b + self.excursion * d;
            let far = if rng.random::<f64>() < self.a_given_end2 {
                c.apart2 += 1;
                false
            } else {
                c.apart2 += 2;
                c.jumps += 1;
                true
            };
            match self.phase1(far, &mut c, rng) {
                PhaseEnd::Recovered => return Ok(c),
                PhaseEnd::Reinfected => c.reinfections += 1,
            }
        }
        Err(SimError::Runaway { events: c.events() })
    }

    fn phase1<R: Rng + ?Sized>(&self, far: bool, c: &mut Counts, rng: &mut R) -> PhaseEnd {
        if far {
            c.apart1 += 1;
            if rng.random::<f64>() < self.r1 {
                return PhaseEnd::Recovered;
            }
            c.jumps += 1;
        }
        let g = self.cont1.sample(rng);
        c.apart1 += self.excursion * g;
        c.jumps += self.excursion * g;
        let u = rng.random::<f64>();
        if u < self.end1[0] {
            c.apart1 += 1;
            PhaseEnd::Recovered
        } else if u < self.end1[0] + self.end1[1] {
            c.apart1 += 1;
            c.jumps += 1;
            PhaseEnd::Reinfected
        } else {
            c.apart1 += 2;
            c.jumps += 1;
            PhaseEnd::Recovered
        }
    }
}

/// Walk position tracked only between meetings.
trait MeetingWalk {
    /// First jump away from a shared vertex.
    fn separate<R: Rng + ?Sized>(&mut self, rng: &mut R);
    /// Takes up to `budget` jumps; returns the step count of a meeting if one
    /// happens within the budget.
    fn advance<R: Rng + ?Sized>(&mut self, budget: u64, rng: &mut R) -> Option<u64>;
}

/// Generic phase sampler: per phase, the number of jumps before the next
/// recovery is geometric; the walk is advanced that far or until it meets.
#[derive(Debug, Clone)]
struct WalkModel {
    budget2: Geometric,
    budget1: Geometric,
}

impl WalkModel {
    fn run<W: MeetingWalk, R: Rng + ?Sized>(&self, walk: &mut W, rng: &mut R) -> Result<Counts, SimError> {
        let mut c = Counts::default();
        // leftover two-infected budget; memoryless, so it carries across meetings
        let mut carry: Option<u64> = None;
        // bounds work, not events: each advance is at most one budget of steps
        let mut rounds = 0u64;
        'colocated: loop {
            c.colocated += 1;
            c.jumps += 1;
            walk.separate(rng);
            let mut k = 2u8;
            let mut budget = carry.take().unwrap_or_else(|| self.budget2.sample(rng));
            loop {
                rounds += 1;
                if rounds > MAX_EVENTS {
                    return Err(SimError::Runaway { events: c.events() });
                }
                match walk.advance(budget, rng) {
                    Some(steps) => {
                        c.add_apart(k, steps);
                        c.jumps += steps;
                        if k == 1 {
                            c.reinfections += 1;
                        } else {
                            carry = Some(budget - steps);
                        }
                        continue 'colocated;
                    }
                    None => {
                        c.add_apart(k, budget + 1);
                        c.jumps += budget;
                        k -= 1;
                        if k == 0 {
                            return Ok(c);
                        }
                        budget = self.budget1.sample(rng);
                    }
                }
            }
        }
    }
}

/// Cycle distance walk: each jump moves the distance by ±1 with reflection
/// at the antipode. Uses one random bit per jump, 64 at a time away from both
/// ends.
struct RingWalk {
    d: u64,
    top: u64,
    odd: bool,
    bits: u64,
    left: u32,
}

impl RingWalk {
    fn new(n: usize) -> Self {
        RingWalk {
            d: 0,
            top: (n / 2) as u64,
            odd: n % 2 == 1,
            bits: 0,
            left: 0,
        }
    }

    fn bit<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.left == 0 {
            self.bits = rng.next_u64();
            self.left = 64;
        }
        let b = self.bits & 1 == 1;
        self.bits >>= 1;
        self.left -= 1;
        b
    }
}

impl MeetingWalk for RingWalk {
    fn separate<R: Rng + ?Sized>(&mut self, _rng: &mut R) {
        self.d = 1;
    }

    fn advance<R: Rng + ?Sized>(&mut self, budget: u64, rng: &mut R) -> Option<u64> {
        let mut used = 0u64;
        while used < budget {
            if self.d > 64 && self.d + 64 < self.top && budget - used >= 64 {
                let ups = rng.next_u64().count_ones() as u64;
                self.d = self.d + 2 * ups - 64;
                used += 64;
                continue;
            }
            let up = self.bit(rng);
            used += 1;
            if self.d == self.top {
                // even n: both directions shorten; odd n: one of them keeps d
                if !(self.odd && up) {
                    self.d -= 1;
                }
            } else if up {
                self.d += 1;
            } else {
                self.d -= 1;
            }
            if self.d == 0 {
                return Some(used);
            }
        }
        None
    }
}

/// Both walkers on actual vertices of an arbitrary graph.
struct PairWalk<'g> {
    graph: &'g Graph,
    pos: [usize; 2],
}

impl<'g> PairWalk<'g> {
    fn new(graph: &'g Graph, start: usize) -> Self {
        PairWalk { graph, pos: [start; 2] }
    }

    fn jump<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let w = usize::from(rng.random::<bool>());
        let nb = self.graph.neighbors(self.pos[w]);
        self.pos[w] = nb[rng.random_range(0..nb.len())];
    }
}

impl MeetingWalk for PairWalk<'_> {
    fn separate<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.jump(rng);
    }

    fn advance<R: Rng + ?Sized>(&mut self, budget: u64, rng: &mut R) -> Option<u64> {
        for step in 1..=budget {
            self.jump(rng);
            if self.pos[0] == self.pos[1] {
                return Some(step);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_bipartite, build_complete, build_ring};
    use crate::sim::stream;

    #[test]
    fn ring_walk_meets_from_one_by_half_on_first_step() {
        let mut rng = stream(11, 0);
        let trials = 20_000;
        let mut hits = 0;
        for _ in 0..trials {
            let mut w = RingWalk::new(10);
            w.separate(&mut rng);
            if w.advance(1, &mut rng) == Some(1) {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        assert!((p - 0.5).abs() < 0.02, "{p}");
    }

    #[test]
    fn ring_walk_stays_in_range() {
        let mut rng = stream(5, 0);
        for n in [3usize, 4, 7, 200, 1001] {
            let mut w = RingWalk::new(n);
            w.separate(&mut rng);
            for _ in 0..500 {
                if w.advance(37, &mut rng).is_some() {
                    w.separate(&mut rng);
                }
                assert!(w.d >= 1 && w.d <= w.top);
            }
        }
    }

    #[test]
    fn counts_are_consistent() {
        let graphs = [
            build_complete(5).unwrap(),
            build_bipartite(2, 6).unwrap(),
            build_ring(8).unwrap(),
        ];
        for g in &graphs {
            let sim = RenewalSimulator::new(g, 1.0, 0.7, 0).unwrap();
            for rep in 0..300 {
                let s = sim.sample(&mut stream(2, rep)).unwrap();
                assert!(s.t > 0.0 && s.n_jumps >= 1);
            }
        }
    }
}
