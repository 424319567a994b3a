//! Laplace transforms of the jump count `N`, the meeting time `M` and the
//! end-of-epidemic time `T`.
//!
//! Every evaluator returns both `L(s)` and its complement `1 − L(s)`. The
//! complement is computed directly (never as `1 − value`) so that the
//! epidemic-time formula keeps its precision when walking is much faster than
//! recovery and `L_M` sits very close to one.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainKind, MeetingChain, MET};
use crate::graph::{Family, Graph};
use crate::numeric::{compensated_sum, solve_dense, solve_tridiagonal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("no closed form: {0}")]
    UnsupportedClosedForm(String),
    #[error("meeting chain is not absorbed with probability one")]
    NoAbsorption,
    #[error("epidemic-time denominator {denominator:e} is not positive at s = {s}")]
    NumericDegeneracy { denominator: f64, s: f64 },
    #[error("moment extraction did not converge ({0})")]
    MomentDivergence(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Which random variable a transform describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    /// Jumps until the walkers meet from distance one.
    N,
    /// Meeting time from distance one.
    M,
    /// End-of-epidemic time.
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    LinearSolve,
    Empirical,
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subject::N => "N",
            Subject::M => "M",
            Subject::T => "T",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::LinearSolve => "linear_solve",
            Provenance::Empirical => "empirical",
        };
        f.write_str(s)
    }
}

/// `L(s)` together with `1 − L(s)`, each computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: f64,
    pub complement: f64,
}

impl TransformValue {
    pub const AT_ZERO: TransformValue = TransformValue {
        value: 1.0,
        complement: 0.0,
    };
}

/// Descriptive metadata carried alongside an evaluator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformContext {
    pub graph: Option<String>,
    /// Walk rate per walker.
    pub lambda: Option<f64>,
    /// Recovery rate per infected agent.
    pub gamma: Option<f64>,
    /// Free-form tag, e.g. which complete-graph variant was used.
    pub label: Option<String>,
}

type Kernel = dyn Fn(f64) -> Result<TransformValue, TransformError> + Send + Sync;

/// A Laplace transform `s ↦ E[e^{−sX}]` on `s ≥ 0` with its metadata.
///
/// Cheap to clone; evaluators are immutable and may be shared across threads.
#[derive(Clone)]
pub struct TransformEvaluator {
    subject: Subject,
    provenance: Provenance,
    context: TransformContext,
    kernel: Arc<Kernel>,
}

impl fmt::Debug for TransformEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformEvaluator")
            .field("subject", &self.subject)
            .field("provenance", &self.provenance)
            .field("context", &self.context)
            .finish_non_exhaustive()
    }
}

impl TransformEvaluator {
    /// Wraps an arbitrary kernel. The kernel is only called with finite
    /// `s > 0`; `s = 0` is answered with `(1, 0)` directly.
    pub fn custom<F>(subject: Subject, provenance: Provenance, context: TransformContext, f: F) -> Self
    where
        F: Fn(f64) -> Result<TransformValue, TransformError> + Send + Sync + 'static,
    {
        TransformEvaluator {
            subject,
            provenance,
            context,
            kernel: Arc::new(f),
        }
    }

    pub fn subject(&self) -> Subject {
        self.subject
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn context(&self) -> &TransformContext {
        &self.context
    }

    pub fn at(&self, s: f64) -> Result<TransformValue, TransformError> {
        if !(s >= 0.0) {
            return Err(TransformError::InvalidArgument(format!(
                "transform argument must be >= 0, got {s}"
            )));
        }
        if s == 0.0 {
            return Ok(TransformValue::AT_ZERO);
        }
        if s == f64::INFINITY {
            return Ok(TransformValue {
                value: 0.0,
                complement: 1.0,
            });
        }
        (self.kernel)(s)
    }

    pub fn eval(&self, s: f64) -> Result<f64, TransformError> {
        self.at(s).map(|v| v.value)
    }

    /// `1 − L(s)`.
    pub fn complement(&self, s: f64) -> Result<f64, TransformError> {
        self.at(s).map(|v| v.complement)
    }

    /// Transform of `N` from one of the built-in laws.
    pub fn jump_count(law: JumpLaw) -> Result<Self, TransformError> {
        law.validate()?;
        let provenance = match law {
            JumpLaw::Chain(_) => Provenance::LinearSolve,
            _ => Provenance::ClosedForm,
        };
        let context = TransformContext {
            graph: law.graph_descriptor(),
            label: Some(law.label().to_string()),
            ..Default::default()
        };
        Ok(Self::custom(Subject::N, provenance, context, move |s| law.at(s)))
    }

    /// Transform of `N` for a graph: closed forms for family graphs (the exact
    /// complete-graph chain unless `variant` asks for the lazy form), the
    /// chain solve otherwise. Odd rings fall back to the chain solve.
    pub fn jump_count_for_graph(g: &Graph, variant: CompleteVariant) -> Result<Self, TransformError> {
        let n = g.n();
        let law = match g.family() {
            Family::Complete => match variant {
                CompleteVariant::Exact => JumpLaw::Geometric {
                    p: 1.0 / (n - 1) as f64,
                },
                CompleteVariant::Lazy => JumpLaw::CompleteLazy { n },
            },
            Family::CompleteBipartite { m } => JumpLaw::bipartite(m, n),
            Family::Ring if n.is_multiple_of(2) => JumpLaw::Ring { n },
            _ => JumpLaw::Chain(Arc::new(crate::chain::meeting_chain(g))),
        };
        let mut ev = Self::jump_count(law)?;
        ev.context.graph = Some(g.descriptor());
        Ok(ev)
    }

    /// `L_M(s) = L_N(−log(2λ/(2λ+s)))`: `M` is a sum of `N` independent
    /// `Exp(2λ)` step times.
    pub fn meeting_time(jumps: &TransformEvaluator, lambda: f64) -> Result<Self, TransformError> {
        check_rate("lambda", lambda)?;
        let inner = jumps.clone();
        let context = TransformContext {
            lambda: Some(lambda),
            ..jumps.context.clone()
        };
        Ok(Self::custom(Subject::M, jumps.provenance, context, move |s| {
            inner.at((s / (2.0 * lambda)).ln_1p())
        }))
    }

    /// End-of-epidemic transform from the meeting-time transform.
    pub fn epidemic_time(meeting: &TransformEvaluator, lambda: f64, gamma: f64) -> Result<Self, TransformError> {
        check_rate("lambda", lambda)?;
        check_rate("gamma", gamma)?;
        let inner = meeting.clone();
        let context = TransformContext {
            lambda: Some(lambda),
            gamma: Some(gamma),
            ..meeting.context.clone()
        };
        Ok(Self::custom(Subject::T, meeting.provenance, context, move |s| {
            epidemic_time_value(&inner, lambda, gamma, s)
        }))
    }

    /// `(1/R) Σ e^{−s x_r}` over the given samples.
    pub fn empirical(subject: Subject, samples: Vec<f64>) -> Self {
        let samples: Arc<[f64]> = samples.into();
        Self::custom(subject, Provenance::Empirical, TransformContext::default(), move |s| {
            let r = samples.len() as f64;
            Ok(TransformValue {
                value: compensated_sum(samples.iter().map(|&x| (-s * x).exp())) / r,
                complement: compensated_sum(samples.iter().map(|&x| -(-s * x).exp_m1())) / r,
            })
        })
    }

    pub fn with_context(mut self, context: TransformContext) -> Self {
        self.context = context;
        self
    }
}

fn check_rate(name: &str, x: f64) -> Result<(), TransformError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(TransformError::InvalidArgument(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

/// Which law to use for `N` on the complete graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompleteVariant {
    /// The walker that jumps picks one of `n − 1` neighbours: `Geom(1/(n−1))`.
    #[default]
    Exact,
    /// The jumping walker may land on its own vertex: `e^{−s}/(n − (n−1)e^{−s})`, i.e. `Geom(1/n)`.
    Lazy,
}

/// Laws of the jump count `N` with closed-form or linear-solve transforms.
#[derive(Debug, Clone)]
pub enum JumpLaw {
    /// `e^{−s}/(n − (n−1)e^{−s})`.
    CompleteLazy { n: usize },
    /// `N ~ Geom(p)` on `{1, 2, …}`.
    Geometric { p: f64 },
    /// `N = 1 + 2G` with `G` geometric failures before a success of
    /// probability `q`: meet from distance one w.p. `q`, otherwise step to
    /// distance two and return.
    Bipartite { q: f64 },
    /// Distance-one meeting on the even ring `C_n`.
    Ring { n: usize },
    /// Generic linear solve on a meeting chain.
    Chain(Arc<MeetingChain>),
}

impl JumpLaw {
    pub fn bipartite(m: usize, n: usize) -> Self {
        JumpLaw::Bipartite {
            q: crate::chain::bipartite_meet_probability(m, n),
        }
    }

    /// Limit of the `K_{m, n−m}` law as `n → ∞` with `m` fixed.
    pub fn bipartite_fixed_limit(m: usize) -> Self {
        JumpLaw::Bipartite {
            q: 1.0 / (2 * m) as f64,
        }
    }

    fn validate(&self) -> Result<(), TransformError> {
        match *self {
            JumpLaw::CompleteLazy { n } if n < 2 => Err(TransformError::InvalidArgument(format!(
                "complete graph needs n >= 2, got {n}"
            ))),
            JumpLaw::Geometric { p } | JumpLaw::Bipartite { q: p } if !(p > 0.0 && p <= 1.0) => Err(
                TransformError::InvalidArgument(format!("probability {p} not in (0, 1]")),
            ),
            JumpLaw::Ring { n } if n % 2 == 1 || n < 4 => Err(TransformError::UnsupportedClosedForm(
                format!("ring closed form needs even n >= 4, got n = {n}"),
            )),
            JumpLaw::Chain(ref c) => check_absorbing(c),
            _ => Ok(()),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            JumpLaw::CompleteLazy { .. } => "lazy",
            JumpLaw::Geometric { .. } => "geometric",
            JumpLaw::Bipartite { .. } => "bipartite",
            JumpLaw::Ring { .. } => "ring",
            JumpLaw::Chain(_) => "chain",
        }
    }

    fn graph_descriptor(&self) -> Option<String> {
        match self {
            JumpLaw::CompleteLazy { n } => Some(format!("complete:{n}")),
            JumpLaw::Ring { n } => Some(format!("ring:{n}")),
            JumpLaw::Chain(c) => match c.kind() {
                ChainKind::Complete { n } => Some(format!("complete:{n}")),
                ChainKind::Bipartite { m, n } => Some(format!("bipartite:{m}:{n}")),
                ChainKind::Ring { n } => Some(format!("ring:{n}")),
                ChainKind::Pair => None,
            },
            _ => None,
        }
    }

    fn at(&self, s: f64) -> Result<TransformValue, TransformError> {
        let z = (-s).exp();
        let omz = -(-s).exp_m1();
        Ok(match *self {
            JumpLaw::CompleteLazy { n } => geometric_pgf(1.0 / n as f64, z, omz),
            JumpLaw::Geometric { p } => geometric_pgf(p, z, omz),
            JumpLaw::Bipartite { q } => {
                let d = omz * (1.0 + z) + q * z * z;
                TransformValue {
                    value: q * z / d,
                    complement: omz * (1.0 + z - q * z) / d,
                }
            }
            JumpLaw::Ring { n } => ring_pgf(n, s),
            JumpLaw::Chain(ref chain) => return chain_pgf(chain, z, omz),
        })
    }
}

fn geometric_pgf(p: f64, z: f64, omz: f64) -> TransformValue {
    let d = p + (1.0 - p) * omz;
    TransformValue {
        value: p * z / d,
        complement: omz / d,
    }
}

/// Auxiliary roots of `x² − x + α²` with `α = e^{−s}/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingAux {
    pub alpha: f64,
    pub x1: f64,
    pub x2: f64,
}

impl RingAux {
    pub fn new(s: f64) -> Self {
        let alpha = 0.5 * (-s).exp();
        // 1 − 4α² = 1 − e^{−2s}
        let root = (-(-2.0 * s).exp_m1()).sqrt();
        let x1 = 0.5 * (1.0 + root);
        RingAux {
            alpha,
            x1,
            x2: alpha * alpha / x1,
        }
    }
}

/// `ln(x2/x1)` for the ring roots, stable at both ends of the `s` range.
fn ring_log_ratio(s: f64, root: f64) -> f64 {
    if root < 0.5 {
        -2.0 * root.atanh()
    } else {
        // x2/x1 = e^{−2s}/(1+root)²
        -2.0 * (s + root.ln_1p())
    }
}

fn ring_pgf(n: usize, s: f64) -> TransformValue {
    let half = (n / 2) as f64;
    let z = (-s).exp();
    let omz = -(-s).exp_m1();
    let root = (omz * (1.0 + z)).sqrt();
    let log_ratio = ring_log_ratio(s, root);
    let ratio_top = (half * log_ratio).exp();
    let ratio_below = ((half - 1.0) * log_ratio).exp();
    let denom = (1.0 + root) * (1.0 + ratio_top);
    // 1 − w with w = ratio^{n/2−1} z/(1+root)
    let one_minus_w = -((half - 1.0) * log_ratio - s - root.ln_1p()).exp_m1();
    TransformValue {
        value: z * (1.0 + ratio_below) / denom,
        complement: (omz + root) * one_minus_w / denom,
    }
}

fn check_absorbing(chain: &MeetingChain) -> Result<(), TransformError> {
    // every state reachable from the start must be able to reach Met
    let len = chain.len();
    let mut reach = vec![false; len];
    let mut stack = vec![chain.start()];
    reach[chain.start()] = true;
    while let Some(i) = stack.pop() {
        for &(j, w) in chain.row(i) {
            if w > 0.0 && !reach[j] {
                reach[j] = true;
                stack.push(j);
            }
        }
    }
    let mut to_met = vec![false; len];
    to_met[MET] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..len {
            if !to_met[i] && chain.row(i).iter().any(|&(j, w)| w > 0.0 && to_met[j]) {
                to_met[i] = true;
                changed = true;
            }
        }
    }
    if (0..len).all(|i| !reach[i] || to_met[i]) {
        Ok(())
    } else {
        Err(TransformError::NoAbsorption)
    }
}

/// Solves `φ = z P φ` with `φ(Met) = 1` (and the complement system
/// `ψ = (1 − z) + z P ψ`, `ψ(Met) = 0`) and reads both at the start state.
fn chain_pgf(chain: &MeetingChain, z: f64, omz: f64) -> Result<TransformValue, TransformError> {
    let t = chain.len() - 1;
    let to_met: Vec<f64> = (1..=t)
        .map(|i| {
            chain
                .row(i)
                .iter()
                .filter(|&&(j, _)| j == MET)
                .map(|&(_, w)| z * w)
                .sum()
        })
        .collect();
    let rhs = [to_met, vec![omz; t]];
    let solution = if chain.is_tridiagonal() {
        let mut lower = vec![0.0; t];
        let mut diag = vec![1.0; t];
        let mut upper = vec![0.0; t];
        for i in 0..t {
            for &(j, w) in chain.row(i + 1) {
                if j == MET {
                    continue;
                }
                let j = j - 1;
                if j == i {
                    diag[i] -= z * w;
                } else if j + 1 == i {
                    lower[i] -= z * w;
                } else {
                    upper[i] -= z * w;
                }
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &rhs)
    } else {
        let mut a = nalgebra::DMatrix::identity(t, t);
        for i in 0..t {
            for &(j, w) in chain.row(i + 1) {
                if j != MET {
                    a[(i, j - 1)] -= z * w;
                }
            }
        }
        solve_dense(a, &rhs)
    }
    .ok_or(TransformError::NoAbsorption)?;
    let k = chain.start() - 1;
    let tv = TransformValue {
        value: solution[0][k],
        complement: solution[1][k],
    };
    if tv.value.is_finite() && tv.complement.is_finite() {
        Ok(tv)
    } else {
        Err(TransformError::NoAbsorption)
    }
}

fn epidemic_time_value(
    meeting: &TransformEvaluator,
    lambda: f64,
    gamma: f64,
    s: f64,
) -> Result<TransformValue, TransformError> {
    let a = meeting.complement(s + gamma)?;
    let b = meeting.complement(s + 2.0 * gamma)?;
    let num = compensated_sum([
        2.0 * gamma * a / (s + gamma),
        -2.0 * gamma * b / (s + 2.0 * gamma),
    ]);
    let den = compensated_sum([s / (2.0 * lambda), 2.0 * a, -b]);
    if !(den > 0.0) || !den.is_finite() {
        return Err(TransformError::NumericDegeneracy { denominator: den, s });
    }
    // den − num, rearranged so that the factor s is explicit
    let gap = s * compensated_sum([1.0 / (2.0 * lambda), 2.0 * a / (s + gamma), -b / (s + 2.0 * gamma)]);
    Ok(TransformValue {
        value: num / den,
        complement: gap / den,
    })
}

/// Lazy complete-graph form `e^{−s}/(n − (n−1)e^{−s})`.
pub fn laplace_n_complete(n: usize, s: f64) -> f64 {
    let z = (-s).exp();
    z / (n as f64 - (n - 1) as f64 * z)
}

/// Exact complete-graph law `Geom(1/(n−1))`.
pub fn laplace_n_complete_exact(n: usize, s: f64) -> f64 {
    let z = (-s).exp();
    let omz = -(-s).exp_m1();
    geometric_pgf(1.0 / (n - 1) as f64, z, omz).value
}

/// `½(n/(m(n−m)))e^{−s} / (1 − e^{−2s} + ½(n/(m(n−m)))e^{−2s})`.
pub fn laplace_n_bipartite(m: usize, n: usize, s: f64) -> f64 {
    let c = 0.5 * n as f64 / (m * (n - m)) as f64;
    let z = (-s).exp();
    c * z / (1.0 - z * z + c * z * z)
}

/// Ring closed form for even `n`, evaluated in log space.
pub fn laplace_n_ring(n: usize, s: f64) -> Result<f64, TransformError> {
    JumpLaw::Ring { n }.validate()?;
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(ring_pgf(n, s).value)
}

/// `n → ∞` limit of the ring transform: `e^{−s}/(1 + √(1 − e^{−2s}))`.
pub fn laplace_n_ring_limit(s: f64) -> f64 {
    (-s).exp() / (1.0 + (-(-2.0 * s).exp_m1()).sqrt())
}

/// Exact `L_N` for any absorbing chain via a linear solve.
pub fn laplace_n_generic(chain: &MeetingChain, s: f64) -> Result<f64, TransformError> {
    check_absorbing(chain)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(chain_pgf(chain, (-s).exp(), -(-s).exp_m1())?.value)
}

pub fn laplace_m_from_n(jumps: &TransformEvaluator, lambda: f64, s: f64) -> Result<f64, TransformError> {
    TransformEvaluator::meeting_time(jumps, lambda)?.eval(s)
}

/// The end-of-epidemic transform from the meeting-time transform. Defined as
/// 1 at `s = 0` by continuity.
pub fn laplace_t(meeting: &TransformEvaluator, lambda: f64, gamma: f64, s: f64) -> Result<f64, TransformError> {
    check_rate("lambda", lambda)?;
    check_rate("gamma", gamma)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(epidemic_time_value(meeting, lambda, gamma, s)?.value)
}

/// The end-of-epidemic transform straight from `E[(2λ/(2λ+s+kγ))^N]`.
///
/// Written against transform values rather than complements, so it is an
/// independent evaluation route of the same quantity as
/// [`laplace_t`] ∘ [`laplace_m_from_n`].
pub fn laplace_t_from_n(jumps: &TransformEvaluator, lambda: f64, gamma: f64, s: f64) -> Result<f64, TransformError> {
    check_rate("lambda", lambda)?;
    check_rate("gamma", gamma)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let pgf = |shift: f64| jumps.eval((2.0 * lambda / (2.0 * lambda + shift)).recip().ln());
    let e1 = pgf(s + gamma)?;
    let e2 = pgf(s + 2.0 * gamma)?;
    let num = 2.0 * gamma * ((1.0 - e1) / (s + gamma) - (1.0 - e2) / (s + 2.0 * gamma));
    let den = (2.0 * lambda + s) / (2.0 * lambda) - 2.0 * e1 + e2;
    if !(den > 0.0) {
        return Err(TransformError::NumericDegeneracy { denominator: den, s });
    }
    Ok(num / den)
}

/// k-th moment (k = 1 or 2) of the law behind `ev`, by Richardson-extrapolated
/// one-sided differences of the complement `1 − L` at `s = h, h/2` with
/// `h = 1e−4 / (pilot mean)`.
pub fn moments_from_transform(ev: &TransformEvaluator, k: u32) -> Result<f64, TransformError> {
    if !(1..=2).contains(&k) {
        return Err(TransformError::InvalidArgument(format!(
            "only moments 1 and 2 are supported, got {k}"
        )));
    }
    let eps = 1e-8;
    let pilot = ev.complement(eps)? / eps;
    if !(pilot > 0.0 && pilot.is_finite()) {
        return Err(TransformError::MomentDivergence(format!("pilot mean {pilot}")));
    }
    let h = 1e-4 / pilot;
    let c = |s: f64| ev.complement(s);
    let estimate = |h: f64| -> Result<f64, TransformError> {
        if k == 1 {
            let d = |h: f64| Ok::<_, TransformError>(c(h)? / h);
            Ok(2.0 * d(h / 2.0)? - d(h)?)
        } else {
            let e = |h: f64| Ok::<_, TransformError>((2.0 * c(h)? - c(2.0 * h)?) / (h * h));
            Ok(2.0 * e(h / 2.0)? - e(h)?)
        }
    };
    let coarse = estimate(h)?;
    let fine = estimate(h / 2.0)?;
    let rel = (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if !fine.is_finite() || rel > 1e-4 {
        return Err(TransformError::MomentDivergence(format!(
            "estimates {coarse} and {fine} disagree (relative {rel:.2e})"
        )));
    }
    Ok(fine)
}
