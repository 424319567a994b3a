use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{EpidemicSample, SimError, Simulator};
use crate::numeric::compensated_sum;

/// How replications are scheduled. Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over replications; `threads` caps the worker count.
    /// Without the `parallel` feature this runs sequentially.
    Parallel { threads: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { threads: None }
    }
}

impl Execution {
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            t => Execution::Parallel { threads: t },
        }
    }
}

/// Samples for replications `reps` of `seed`, in replication order.
pub fn run_samples(
    sim: &Simulator<'_>,
    seed: u64,
    reps: Range<u64>,
    exec: Execution,
) -> Result<Vec<EpidemicSample>, SimError> {
    match exec {
        Execution::Sequential => reps.map(|r| sim.replicate(seed, r)).collect(),
        Execution::Parallel { threads } => parallel(sim, seed, reps, threads),
    }
}

#[cfg(feature = "parallel")]
fn parallel(
    sim: &Simulator<'_>,
    seed: u64,
    reps: Range<u64>,
    threads: Option<usize>,
) -> Result<Vec<EpidemicSample>, SimError> {
    use rayon::prelude::*;
    let work = || {
        reps.clone()
            .into_par_iter()
            .map(|r| sim.replicate(seed, r))
            .collect::<Result<Vec<_>, _>>()
    };
    match threads {
        None => work(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| SimError::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel(
    sim: &Simulator<'_>,
    seed: u64,
    reps: Range<u64>,
    _threads: Option<usize>,
) -> Result<Vec<EpidemicSample>, SimError> {
    run_samples(sim, seed, reps, Execution::Sequential)
}

/// `reps` replications summarised on `s_grid`.
pub fn run_batch(
    sim: &Simulator<'_>,
    reps: u64,
    seed: u64,
    s_grid: &[f64],
    exec: Execution,
) -> Result<SampleSummary, SimError> {
    if reps == 0 {
        return Err(SimError::InvalidArgument("need at least one replication".into()));
    }
    let samples = run_samples(sim, seed, 0..reps, exec)?;
    SampleSummary::new(samples.iter().map(|s| s.t).collect(), s_grid)
}

/// Empirical transform at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformPoint {
    pub s: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Summary of a set of `T` samples.
///
/// Keeps every sample in ascending order, so the ECDF and quantiles are
/// exact and merging shards gives the same object as one big batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    sorted: Vec<f64>,
    s_grid: Vec<f64>,
}

impl SampleSummary {
    pub fn new(mut samples: Vec<f64>, s_grid: &[f64]) -> Result<Self, SimError> {
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(SimError::InvalidArgument(format!("non-finite sample {bad}")));
        }
        if let Some(bad) = s_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(SimError::InvalidArgument(format!("bad s-grid point {bad}")));
        }
        samples.sort_by(f64::total_cmp);
        Ok(SampleSummary {
            sorted: samples,
            s_grid: s_grid.to_vec(),
        })
    }

    /// Combines two shards summarised on the same grid.
    pub fn merge(&self, other: &SampleSummary) -> Result<SampleSummary, SimError> {
        if self.s_grid != other.s_grid {
            return Err(SimError::InvalidArgument("cannot merge summaries on different s-grids".into()));
        }
        let (a, b) = (&self.sorted, &other.sorted);
        let mut merged = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i].total_cmp(&b[j]).is_le() {
                merged.push(a[i]);
                i += 1;
            } else {
                merged.push(b[j]);
                j += 1;
            }
        }
        merged.extend_from_slice(&a[i..]);
        merged.extend_from_slice(&b[j..]);
        Ok(SampleSummary {
            sorted: merged,
            s_grid: self.s_grid.clone(),
        })
    }

    pub fn count(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.sorted.iter().copied()) / self.count() as f64
    }

    /// Unbiased sample variance (0 for a single sample).
    pub fn variance(&self) -> f64 {
        let n = self.count();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        compensated_sum(self.sorted.iter().map(|x| (x - m) * (x - m))) / (n - 1) as f64
    }

    pub fn mean_std_error(&self) -> f64 {
        (self.variance() / self.count() as f64).sqrt()
    }

    /// Linear-interpolation quantile of the sorted sample, `p ∈ [0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let h = p * (self.count() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(self.count() - 1);
        self.sorted[lo] + (h - lo as f64) * (self.sorted[hi] - self.sorted[lo])
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Fraction of samples `≤ t`.
    pub fn ecdf(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.count() as f64
    }

    /// `(1/R) Σ e^{−s T_r}` with standard error `sd/√R`.
    pub fn transform(&self, s: f64) -> TransformPoint {
        let n = self.count() as f64;
        let value = compensated_sum(self.sorted.iter().map(|t| (-s * t).exp())) / n;
        let var = if self.count() < 2 {
            0.0
        } else {
            compensated_sum(self.sorted.iter().map(|t| {
                let d = (-s * t).exp() - value;
                d * d
            })) / (n - 1.0)
        };
        TransformPoint {
            s,
            value,
            std_error: (var / n).sqrt(),
        }
    }

    pub fn transform_grid(&self) -> Vec<TransformPoint> {
        self.s_grid.iter().map(|&s| self.transform(s)).collect()
    }

    /// Same samples multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> SampleSummary {
        SampleSummary {
            sorted: self.sorted.iter().map(|x| x * factor).collect(),
            s_grid: self.s_grid.clone(),
        }
    }

    pub fn report(&self) -> SummaryReport {
        SummaryReport {
            count: self.count(),
            mean: self.mean(),
            variance: self.variance(),
            mean_std_error: self.mean_std_error(),
            median: self.median(),
            quantiles: [0.1, 0.25, 0.5, 0.75, 0.9]
                .iter()
                .map(|&p| (p, self.quantile(p)))
                .collect(),
            transform: self.transform_grid(),
        }
    }
}

/// Serializable snapshot of a [`SampleSummary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    pub median: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub transform: Vec<TransformPoint>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let s = SampleSummary::new(vec![3.0, 1.0, 2.0, 4.0], &[0.0, 1.0]).unwrap();
        assert_eq!(s.sorted_samples(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean(), 2.5);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.median(), 2.5);
        assert_eq!(s.ecdf(2.0), 0.5);
        assert_eq!(s.transform(0.0).value, 1.0);
        assert_eq!(s.transform(0.0).std_error, 0.0);
    }

    #[test]
    fn merge_is_order_free() {
        let a = SampleSummary::new(vec![0.5, 2.0, 9.0], &[1.0]).unwrap();
        let b = SampleSummary::new(vec![1.0, 2.0], &[1.0]).unwrap();
        let ab = a.merge(&b).unwrap();
        assert_eq!(ab, b.merge(&a).unwrap());
        let all = SampleSummary::new(vec![9.0, 2.0, 1.0, 2.0, 0.5], &[1.0]).unwrap();
        assert_eq!(ab, all);
        let c = SampleSummary::new(vec![1.0], &[2.0]).unwrap();
        assert!(a.merge(&c).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampleSummary::new(vec![f64::NAN], &[]).is_err());
        assert!(SampleSummary::new(vec![1.0], &[-1.0]).is_err());
    }

    #[test]
    fn thread_setting() {
        assert_eq!(Execution::with_threads(Some(1)), Execution::Sequential);
        assert_eq!(Execution::with_threads(None), Execution::default());
    }
}
