//! Scaling schedules, limit laws and finite-`n` convergence checks.
//!
//! A schedule fixes a graph family, rate sequences `λ_n`, `γ_n` and the
//! normaliser `b_n` under which `b_n T_n` should approach a named law.
//! Asymptotic conditions (`x_n → 0`) are checked numerically on the grid:
//! each ratio must be non-increasing along the grid and at most 0.1 at its
//! largest `n`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::meeting_chain;
use crate::graph::{build_bipartite, build_complete, build_ring, Graph, GraphError};
use crate::sim::{run_batch, Engine, Execution, SimError, Simulator};
use crate::stats::{exp1_cdf, hypoexp_cdf, ks_distance};

/// Largest ratio allowed at the top of the grid for an `o(1)` condition.
pub const REGIME_MARGIN: f64 = 0.1;

/// s-grid for transform-space comparisons.
pub const TRANSFORM_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("schedule '{schedule}': {condition} is {ratio:.3e} at n = {n}, violating the regime")]
    RegimeViolation {
        schedule: String,
        condition: String,
        n: usize,
        ratio: f64,
    },
    #[error("invalid n-grid: {0}")]
    InvalidGrid(String),
    #[error("unknown limit law '{0}'")]
    UnknownLaw(String),
    #[error("unknown schedule '{0}'")]
    UnknownSchedule(String),
    #[error("schedule '{schedule}' is invalid: {reason}")]
    InvalidSchedule { schedule: String, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

type Result<T> = std::result::Result<T, AsymptoticsError>;

/// `coef · n^exponent · (ln n)^log_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateFn {
    pub coef: f64,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub log_exponent: f64,
}

impl RateFn {
    pub const fn power(coef: f64, exponent: f64) -> Self {
        RateFn {
            coef,
            exponent,
            log_exponent: 0.0,
        }
    }

    pub const fn constant(value: f64) -> Self {
        Self::power(value, 0.0)
    }

    pub fn at(&self, n: usize) -> f64 {
        let x = n as f64;
        let mut v = self.coef * x.powf(self.exponent);
        if self.log_exponent != 0.0 {
            v *= x.ln().powf(self.log_exponent);
        }
        v
    }
}

impl fmt::Display for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coef)?;
        if self.exponent != 0.0 {
            write!(f, "·n^{}", self.exponent)?;
        }
        if self.log_exponent != 0.0 {
            write!(f, "·ln(n)^{}", self.log_exponent)?;
        }
        Ok(())
    }
}

/// Graph family of a schedule, with its size parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleFamily {
    Complete,
    /// `K_{m, n−m}` with `m = round(α n)`.
    BipartiteFraction { alpha: f64 },
    /// `K_{m, n−m}` with `m = round(side(n))`, `m → ∞`, `m = o(n)`.
    BipartiteGrowing { side: RateFn },
    /// `K_{m, n−m}` with fixed `m` (`m = 1` is the star).
    BipartiteFixed { m: usize },
    Ring,
}

impl ScheduleFamily {
    /// Size of the first side at `n`, for bipartite families.
    pub fn side(&self, n: usize) -> Option<usize> {
        let clamp = |m: f64| (m.round() as usize).clamp(1, n.saturating_sub(1).max(1));
        match *self {
            ScheduleFamily::BipartiteFraction { alpha } => Some(clamp(alpha * n as f64)),
            ScheduleFamily::BipartiteGrowing { side } => Some(clamp(side.at(n))),
            ScheduleFamily::BipartiteFixed { m } => Some(m),
            _ => None,
        }
    }

    pub fn build(&self, n: usize) -> Result<Graph> {
        Ok(match self {
            ScheduleFamily::Complete => build_complete(n)?,
            ScheduleFamily::Ring => build_ring(n)?,
            _ => build_bipartite(self.side(n).expect("bipartite family"), n)?,
        })
    }
}

/// Which limit theorem (or case analysis) fixes `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    /// Complete graph, `λ_n = ω(n γ_n)`: `b_n = n γ_n² / λ_n`.
    CompleteI,
    /// Complete graph, `λ_n = o(γ_n)`: `b_n = 2 λ_n`.
    CompleteII,
    /// Complete graph, `γ_n = o(λ_n)`, `λ_n = o(n γ_n)`: `b_n = γ_n`.
    CompleteIII,
    /// `a_n N_n → X` with moments `c1, c2`:
    /// `b_n = (c2 / (2 c1)) γ_n² / (λ_n a_n)`.
    JumpScaling { c1: f64, c2: f64 },
    /// `N_n → X` with integer moments `c1, c2`:
    /// `b_n = ((c1 + c2) / (2 (1 + c1))) γ_n² / λ_n`.
    FixedJumps { c1: i64, c2: i64 },
    /// Ring with `γ_n = o(λ_n)`: `b_n = γ_n`.
    Ring,
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::CompleteI => "complete-i",
            Regime::CompleteII => "complete-ii",
            Regime::CompleteIII => "complete-iii",
            Regime::JumpScaling { .. } => "jump-scaling",
            Regime::FixedJumps { .. } => "fixed-jumps",
            Regime::Ring => "ring",
        }
    }
}

/// `(c1 + c2) / (2 (1 + c1))` in exact arithmetic.
pub fn fixed_jumps_coefficient(c1: i64, c2: i64) -> Ratio<i64> {
    Ratio::new(c1 + c2, 2 * (1 + c1))
}

/// Limit moments of `N` on `K_{m, n−m}` with `m` fixed: `c1 = 4m − 1`,
/// `c2 = 16m(2m − 1) + 1`.
pub fn fixed_side_moments(m: i64) -> (i64, i64) {
    (4 * m - 1, 16 * m * (2 * m - 1) + 1)
}

/// Named limit laws for `b_n T_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitLaw {
    /// `Exp(1)`.
    Exp1,
    /// `X + Y` with independent `X ~ Exp(1)`, `Y ~ Exp(2)`.
    Hypoexponential,
    /// The ring law, known only through its transform.
    Ring,
}

impl LimitLaw {
    pub fn name(&self) -> &'static str {
        match self {
            LimitLaw::Exp1 => "exp1",
            LimitLaw::Hypoexponential => "hypoexponential",
            LimitLaw::Ring => "ring",
        }
    }

    pub fn transform(&self, s: f64) -> f64 {
        match self {
            LimitLaw::Exp1 => 1.0 / (1.0 + s),
            LimitLaw::Hypoexponential => 2.0 / ((s + 1.0) * (s + 2.0)),
            LimitLaw::Ring => {
                let (a, b) = ((1.0 + s).sqrt(), (2.0 + s).sqrt());
                2.0 * (b - a) / (a * b * (2.0 * a - b))
            }
        }
    }

    pub fn cdf(&self, t: f64) -> Option<f64> {
        match self {
            LimitLaw::Exp1 => Some(exp1_cdf(t)),
            LimitLaw::Hypoexponential => Some(hypoexp_cdf(t)),
            LimitLaw::Ring => None,
        }
    }

    pub fn median(&self) -> Option<f64> {
        match self {
            LimitLaw::Exp1 => Some(std::f64::consts::LN_2),
            LimitLaw::Hypoexponential => Some(-(1.0 - std::f64::consts::FRAC_1_SQRT_2).ln()),
            LimitLaw::Ring => None,
        }
    }

    /// `(E X, E X²)` when finite.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match self {
            LimitLaw::Exp1 => Some((1.0, 2.0)),
            LimitLaw::Hypoexponential => Some((1.5, 3.5)),
            LimitLaw::Ring => None,
        }
    }
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LimitLaw {
    type Err = AsymptoticsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" => Ok(LimitLaw::Exp1),
            "hypoexponential" => Ok(LimitLaw::Hypoexponential),
            "ring" => Ok(LimitLaw::Ring),
            other => Err(AsymptoticsError::UnknownLaw(other.to_string())),
        }
    }
}

/// `limit_law_transform` by tag.
pub fn limit_law_transform(law: &str, s: f64) -> Result<f64> {
    Ok(law.parse::<LimitLaw>()?.transform(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSchedule {
    pub name: String,
    pub family: ScheduleFamily,
    pub lambda: RateFn,
    pub gamma: RateFn,
    pub regime: Regime,
    pub law: LimitLaw,
}

/// One `o(1)` condition evaluated along a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub condition: String,
    pub ratios: Vec<(usize, f64)>,
}

impl ScalingSchedule {
    pub fn lambda_at(&self, n: usize) -> f64 {
        self.lambda.at(n)
    }

    pub fn gamma_at(&self, n: usize) -> f64 {
        self.gamma.at(n)
    }

    /// Normaliser for `N`: `1/n`, or `1/m` for a growing side.
    pub fn a_n(&self, n: usize) -> Option<f64> {
        match self.family {
            ScheduleFamily::Complete | ScheduleFamily::BipartiteFraction { .. } => Some(1.0 / n as f64),
            ScheduleFamily::BipartiteGrowing { .. } => Some(1.0 / self.family.side(n)? as f64),
            _ => None,
        }
    }

    pub fn limit_moments(&self) -> Option<(f64, f64)> {
        match self.regime {
            Regime::JumpScaling { c1, c2 } => Some((c1, c2)),
            Regime::FixedJumps { c1, c2 } => Some((c1 as f64, c2 as f64)),
            Regime::CompleteI => Some((1.0, 2.0)),
            _ => None,
        }
    }

    pub fn b_n(&self, n: usize) -> f64 {
        let (l, g) = (self.lambda_at(n), self.gamma_at(n));
        match self.regime {
            Regime::CompleteI => n as f64 * g * g / l,
            Regime::CompleteII => 2.0 * l,
            Regime::CompleteIII | Regime::Ring => g,
            Regime::JumpScaling { c1, c2 } => {
                let a = self.a_n(n).expect("validated family");
                c2 / (2.0 * c1) * g * g / (l * a)
            }
            Regime::FixedJumps { c1, c2 } => {
                let k = fixed_jumps_coefficient(c1, c2);
                *k.numer() as f64 / *k.denom() as f64 * g * g / l
            }
        }
    }

    fn invalid(&self, reason: &str) -> AsymptoticsError {
        AsymptoticsError::InvalidSchedule {
            schedule: self.name.clone(),
            reason: reason.to_string(),
        }
    }

    /// Structural consistency of family, regime and law.
    pub fn validate(&self) -> Result<()> {
        let complete = matches!(self.family, ScheduleFamily::Complete);
        match self.regime {
            Regime::CompleteI | Regime::CompleteII | Regime::CompleteIII if !complete => {
                return Err(self.invalid("complete-graph regime on a non-complete family"))
            }
            Regime::JumpScaling { c1, c2 } if !(c1 > 0.0 && c2 > 0.0) => {
                return Err(self.invalid("jump-scaling moments must be positive"))
            }
            Regime::JumpScaling { .. } if self.a_n(2).is_none() => {
                return Err(self.invalid("jump scaling needs a family with a_n → 0"))
            }
            Regime::FixedJumps { c1, c2 } if c1 < 0 || c2 <= 0 => {
                return Err(self.invalid("fixed-jumps moments must be positive"))
            }
            Regime::Ring if !matches!(self.family, ScheduleFamily::Ring) => {
                return Err(self.invalid("ring regime on a non-ring family"))
            }
            _ => {}
        }
        if let ScheduleFamily::BipartiteFraction { alpha } = self.family {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(self.invalid("alpha must lie in (0, 1)"));
            }
        }
        if let ScheduleFamily::BipartiteFixed { m } = self.family {
            if m == 0 {
                return Err(self.invalid("fixed side must be at least 1"));
            }
        }
        for (name, r) in [("lambda", self.lambda), ("gamma", self.gamma)] {
            if !(r.coef > 0.0 && r.coef.is_finite() && r.exponent.is_finite() && r.log_exponent.is_finite()) {
                return Err(self.invalid(&format!("{name} rate must have a positive finite coefficient")));
            }
        }
        Ok(())
    }

    /// The `o(1)` ratios this regime requires.
    fn conditions(&self, n: usize) -> Vec<(&'static str, f64)> {
        let (l, g, x) = (self.lambda_at(n), self.gamma_at(n), n as f64);
        match self.regime {
            Regime::CompleteI => vec![("n·gamma/lambda", x * g / l)],
            Regime::CompleteII => vec![("lambda/gamma", l / g)],
            Regime::CompleteIII => vec![("gamma/lambda", g / l), ("lambda/(n·gamma)", l / (x * g))],
            Regime::JumpScaling { .. } => {
                let a = self.a_n(n).unwrap_or(f64::NAN);
                let mut c = vec![("a_n", a), ("gamma/(lambda·a_n)", g / (l * a))];
                if let ScheduleFamily::BipartiteGrowing { .. } = self.family {
                    c.push(("m/n", self.family.side(n).unwrap_or(n) as f64 / x));
                }
                c
            }
            Regime::FixedJumps { .. } => vec![("gamma/lambda", g / l)],
            Regime::Ring => vec![("gamma/lambda", g / l), ("lambda/(gamma·n²)", l / (g * x * x))],
        }
    }

    /// Evaluates every regime condition on `n_grid` (ascending) and rejects
    /// the schedule if any ratio grows along the grid or exceeds
    /// [`REGIME_MARGIN`] at the largest `n`.
    pub fn check_regime(&self, n_grid: &[usize]) -> Result<Vec<RegimeCheck>> {
        self.validate()?;
        check_grid(n_grid, self.family)?;
        let per_n: Vec<_> = n_grid.iter().map(|&n| (n, self.conditions(n))).collect();
        let mut checks = Vec::new();
        for (k, &(name, _)) in per_n[0].1.iter().enumerate() {
            let ratios: Vec<(usize, f64)> = per_n.iter().map(|(n, c)| (*n, c[k].1)).collect();
            let violation = |n: usize, ratio: f64| AsymptoticsError::RegimeViolation {
                schedule: self.name.clone(),
                condition: name.to_string(),
                n,
                ratio,
            };
            for w in ratios.windows(2) {
                if !(w[1].1 <= w[0].1 * (1.0 + 1e-12)) {
                    return Err(violation(w[1].0, w[1].1));
                }
            }
            let &(n_last, last) = ratios.last().expect("non-empty grid");
            if !(last <= REGIME_MARGIN) {
                return Err(violation(n_last, last));
            }
            checks.push(RegimeCheck {
                condition: name.to_string(),
                ratios,
            });
        }
        Ok(checks)
    }

    /// `a_n · E[N_n]` from the exact meeting chain; approaches `c1` under
    /// the jump-scaling regime (and equals `E[N_n]` itself for fixed jumps).
    pub fn normalized_jump_mean(&self, n: usize) -> Result<f64> {
        let g = self.family.build(n)?;
        let mean = meeting_chain(&g)
            .mean_absorption_steps()
            .ok_or_else(|| self.invalid("meeting chain is not absorbing"))?;
        Ok(mean * self.a_n(n).unwrap_or(1.0))
    }
}

fn check_grid(n_grid: &[usize], family: ScheduleFamily) -> Result<()> {
    if n_grid.is_empty() {
        return Err(AsymptoticsError::InvalidGrid("empty".into()));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AsymptoticsError::InvalidGrid("must be strictly increasing".into()));
    }
    let min = match family {
        ScheduleFamily::Ring => 3,
        _ => 2,
    };
    if n_grid[0] < min {
        return Err(AsymptoticsError::InvalidGrid(format!("n must be at least {min}")));
    }
    Ok(())
}

/// The schedule catalogue with representative rate sequences.
pub fn builtin_schedules() -> Vec<ScalingSchedule> {
    let one = RateFn::constant(1.0);
    let s = |name: &str, family, lambda, gamma, regime, law| ScalingSchedule {
        name: name.to_string(),
        family,
        lambda,
        gamma,
        regime,
        law,
    };
    let half: f64 = 0.5;
    let (c1_half, c2_half) = (4.0 * half * (1.0 - half), 32.0 * (half * (1.0 - half)).powi(2));
    let (c1_star, c2_star) = fixed_side_moments(1);
    let (c1_two, c2_two) = fixed_side_moments(2);
    vec![
        s(
            "complete-i",
            ScheduleFamily::Complete,
            RateFn::power(1.0, 1.5),
            one,
            Regime::CompleteI,
            LimitLaw::Exp1,
        ),
        s(
            "complete-i-divergent",
            ScheduleFamily::Complete,
            RateFn::power(1.0, 2.0),
            one,
            Regime::CompleteI,
            LimitLaw::Exp1,
        ),
        s(
            "complete-i-vanishing",
            ScheduleFamily::Complete,
            RateFn::power(1.0, 2.5),
            RateFn::power(1.0, 1.0),
            Regime::CompleteI,
            LimitLaw::Exp1,
        ),
        s(
            "complete-ii",
            ScheduleFamily::Complete,
            one,
            RateFn::power(1.0, 1.0),
            Regime::CompleteII,
            LimitLaw::Exp1,
        ),
        s(
            "complete-iii",
            ScheduleFamily::Complete,
            RateFn::power(1.0, 0.5),
            one,
            Regime::CompleteIII,
            LimitLaw::Hypoexponential,
        ),
        s(
            "bipartite-half",
            ScheduleFamily::BipartiteFraction { alpha: half },
            RateFn::power(1.0, 1.5),
            one,
            Regime::JumpScaling {
                c1: c1_half,
                c2: c2_half,
            },
            LimitLaw::Exp1,
        ),
        s(
            "bipartite-sqrt-side",
            ScheduleFamily::BipartiteGrowing {
                side: RateFn::power(1.0, 0.5),
            },
            RateFn::power(1.0, 1.25),
            one,
            Regime::JumpScaling { c1: 4.0, c2: 32.0 },
            LimitLaw::Exp1,
        ),
        s(
            "bipartite-log-side",
            ScheduleFamily::BipartiteGrowing {
                side: RateFn {
                    coef: 1.0,
                    exponent: 0.0,
                    log_exponent: 2.0,
                },
            },
            RateFn::power(1.0, 1.0),
            one,
            Regime::JumpScaling { c1: 4.0, c2: 32.0 },
            LimitLaw::Exp1,
        ),
        s(
            "bipartite-fixed-2",
            ScheduleFamily::BipartiteFixed { m: 2 },
            RateFn::power(1.0, 1.0),
            one,
            Regime::FixedJumps { c1: c1_two, c2: c2_two },
            LimitLaw::Exp1,
        ),
        s(
            "star",
            ScheduleFamily::BipartiteFixed { m: 1 },
            RateFn::power(1.0, 1.0),
            one,
            Regime::FixedJumps {
                c1: c1_star,
                c2: c2_star,
            },
            LimitLaw::Exp1,
        ),
        s(
            "ring",
            ScheduleFamily::Ring,
            RateFn::power(1.0, 4.0 / 3.0),
            one,
            Regime::Ring,
            LimitLaw::Ring,
        ),
    ]
}

pub fn schedule_by_name(name: &str) -> Result<ScalingSchedule> {
    builtin_schedules()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| AsymptoticsError::UnknownSchedule(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Kolmogorov-Smirnov distance to the law's CDF.
    Ks,
    /// `sup_s |Ĺ(s) − L(s)|` over [`TRANSFORM_GRID`].
    TransformSup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub b_n: f64,
    pub reps: u64,
    pub distance: f64,
    /// `1.36/√R` for KS, `1/√R` for transforms: the sampling-noise scale.
    pub noise: f64,
    /// Of the scaled samples `b_n T_n`.
    pub mean: f64,
    pub mean_std_error: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub schedule: String,
    pub regime: &'static str,
    pub law: LimitLaw,
    pub metric: Metric,
    pub rows: Vec<ConvergenceRow>,
    pub regime_checks: Vec<RegimeCheck>,
    /// Every distance strictly below its predecessor.
    pub strictly_decreasing: bool,
    /// No increase larger than the noise scale of the later point.
    pub nonincreasing_within_noise: bool,
}

impl ConvergenceReport {
    pub fn final_distance(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.distance)
    }
}

/// Simulates `T_n` on every grid point, scales by `b_n` and measures the
/// distance to the schedule's limit law.
pub fn convergence_check(
    schedule: &ScalingSchedule,
    n_grid: &[usize],
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<ConvergenceReport> {
    let regime_checks = schedule.check_regime(n_grid)?;
    let metric = if schedule.law.cdf(0.0).is_some() {
        Metric::Ks
    } else {
        Metric::TransformSup
    };
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let g = schedule.family.build(n)?;
        let (lambda, gamma) = (schedule.lambda_at(n), schedule.gamma_at(n));
        let b_n = schedule.b_n(n);
        let sim = Simulator::new(&g, lambda, gamma, 0, Engine::Renewal)?;
        let scaled = run_batch(&sim, reps, seed, &TRANSFORM_GRID, exec)?.scaled(b_n);
        let (distance, noise) = match metric {
            Metric::Ks => {
                let law = schedule.law;
                let d = ks_distance(scaled.sorted_samples(), |t| law.cdf(t).expect("closed-form cdf"));
                (d, 1.36 / (reps as f64).sqrt())
            }
            Metric::TransformSup => {
                let d = scaled
                    .transform_grid()
                    .iter()
                    .map(|p| (p.value - schedule.law.transform(p.s)).abs())
                    .fold(0.0, f64::max);
                (d, 1.0 / (reps as f64).sqrt())
            }
        };
        rows.push(ConvergenceRow {
            n,
            lambda,
            gamma,
            b_n,
            reps,
            distance,
            noise,
            mean: scaled.mean(),
            mean_std_error: scaled.mean_std_error(),
            median: scaled.median(),
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let nonincreasing_within_noise = rows.windows(2).all(|w| w[1].distance <= w[0].distance + w[1].noise);
    Ok(ConvergenceReport {
        schedule: schedule.name.clone(),
        regime: schedule.regime.tag(),
        law: schedule.law,
        metric,
        rows,
        regime_checks,
        strictly_decreasing,
        nonincreasing_within_noise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Growing,
    Shrinking,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub b_n: f64,
    /// Of unscaled `T_n`.
    pub mean: f64,
    pub median: f64,
    /// `median(T_n) / (median(law) / b_n)`, when the law's median is known.
    pub median_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub schedule: String,
    pub rows: Vec<DivergenceRow>,
    pub median_trend: Trend,
}

/// Tracks the unscaled `T_n` along the grid: it blows up when `b_n → 0` and
/// collapses when `b_n → ∞`.
pub fn divergence_probe(
    schedule: &ScalingSchedule,
    n_grid: &[usize],
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<DivergenceReport> {
    schedule.validate()?;
    check_grid(n_grid, schedule.family)?;
    if n_grid.len() < 3 {
        return Err(AsymptoticsError::InvalidGrid("a trend needs at least 3 points".into()));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let g = schedule.family.build(n)?;
        let (lambda, gamma) = (schedule.lambda_at(n), schedule.gamma_at(n));
        let b_n = schedule.b_n(n);
        let sim = Simulator::new(&g, lambda, gamma, 0, Engine::Renewal)?;
        let summary = run_batch(&sim, reps, seed, &[], exec)?;
        let median = summary.median();
        rows.push(DivergenceRow {
            n,
            lambda,
            gamma,
            b_n,
            mean: summary.mean(),
            median,
            median_ratio: schedule.law.median().map(|m| median * b_n / m),
        });
    }
    let median_trend = if rows.windows(2).all(|w| w[1].median > w[0].median) {
        Trend::Growing
    } else if rows.windows(2).all(|w| w[1].median < w[0].median) {
        Trend::Shrinking
    } else {
        Trend::Mixed
    };
    Ok(DivergenceReport {
        schedule: schedule.name.clone(),
        rows,
        median_trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_transforms() {
        assert_eq!(LimitLaw::Exp1.transform(1.0), 0.5);
        assert_eq!(LimitLaw::Hypoexponential.transform(0.0), 1.0);
        assert!((LimitLaw::Ring.transform(1.0) - 0.236_700_683_814_454_79).abs() < 1e-15);
        for law in [LimitLaw::Exp1, LimitLaw::Hypoexponential, LimitLaw::Ring] {
            assert!((law.transform(0.0) - 1.0).abs() < 1e-15, "{law}");
            let mut prev = 1.0;
            for i in 1..50 {
                let v = law.transform(10f64.powf(-3.0 + 6.0 * i as f64 / 49.0));
                assert!(v <= prev && v > 0.0, "{law}");
                prev = v;
            }
            assert_eq!(law.name().parse::<LimitLaw>().unwrap(), law);
        }
        assert!(matches!(limit_law_transform("gamma", 1.0), Err(AsymptoticsError::UnknownLaw(_))));
    }

    #[test]
    fn law_medians_hit_half() {
        for law in [LimitLaw::Exp1, LimitLaw::Hypoexponential] {
            assert!((law.cdf(law.median().unwrap()).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_jump_coefficients_are_exact() {
        for m in 1..=10i64 {
            let (c1, c2) = fixed_side_moments(m);
            assert_eq!(fixed_jumps_coefficient(c1, c2), Ratio::new(8 * m - 3, 2));
        }
        assert_eq!(fixed_side_moments(1), (3, 17));
        assert_eq!(fixed_jumps_coefficient(3, 17), Ratio::new(5, 2));
        assert_eq!(fixed_jumps_coefficient(7, 97), Ratio::new(13, 2));
    }

    #[test]
    fn exponential_quarter_moments() {
        // X ~ Exp(rate 1/4): E X = 4, E X² = 2·4² = 32
        let theta: f64 = 0.25;
        assert_eq!((1.0 / theta, 2.0 / (theta * theta)), (4.0, 32.0));
    }

    #[test]
    fn b_n_values() {
        let star = schedule_by_name("star").unwrap();
        assert!((star.b_n(1000) - 2.5 / 1000.0).abs() < 1e-18);
        let c = schedule_by_name("complete-i").unwrap();
        assert!((c.b_n(100) - 100.0 / 1000.0).abs() < 1e-15);
        let half = schedule_by_name("bipartite-half").unwrap();
        // 4α(1−α) n γ²/λ at α = ½
        assert!((half.b_n(400) - 400.0 / 8000.0).abs() < 1e-15);
        let two = schedule_by_name("bipartite-fixed-2").unwrap();
        assert!((two.b_n(10) - 0.65).abs() < 1e-15);
        assert_eq!(schedule_by_name("ring").unwrap().b_n(50), 1.0);
        assert!(schedule_by_name("nope").is_err());
    }

    #[test]
    fn catalogue_is_valid() {
        for s in builtin_schedules() {
            s.validate().unwrap();
            let grid = [1000, 4000, 16000];
            s.check_regime(&grid).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
    }

    #[test]
    fn regime_violations_are_rejected() {
        let mut s = schedule_by_name("complete-i").unwrap();
        // λ = n: n γ / λ stays at 1
        s.lambda = RateFn::power(1.0, 1.0);
        assert!(matches!(
            s.check_regime(&[50, 200, 1000]),
            Err(AsymptoticsError::RegimeViolation { .. })
        ));
        let s = schedule_by_name("complete-iii").unwrap();
        // too small for λ/(nγ) ≤ 0.1
        assert!(s.check_regime(&[10, 20, 50]).is_err());
        assert!(s.check_regime(&[200, 100]).is_err());
        let mut bad = schedule_by_name("star").unwrap();
        bad.regime = Regime::CompleteI;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn jump_means_approach_c1() {
        for name in ["complete-i", "bipartite-half", "bipartite-sqrt-side"] {
            let s = schedule_by_name(name).unwrap();
            let (c1, _) = s.limit_moments().unwrap();
            let v = s.normalized_jump_mean(2000).unwrap();
            assert!((v / c1 - 1.0).abs() < 0.05, "{name}: {v} vs {c1}");
        }
        let star = schedule_by_name("star").unwrap();
        let v = star.normalized_jump_mean(2000).unwrap();
        assert!((v / 3.0 - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn schedule_serde_round_trip() {
        for s in builtin_schedules() {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<ScalingSchedule>(&text).unwrap(), s);
        }
    }
}
