//! Small numerical kernels shared by the transform and oracle code.

use nalgebra::{DMatrix, DVector};

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` couples row `i` to `i-1` (ignored for `i = 0`), `upper[i]`
/// couples row `i` to `i+1` (ignored for the last row). Several right-hand
/// sides share one elimination. Returns `None` on a zero pivot.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[Vec<f64>],
) -> Option<Vec<Vec<f64>>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d: Vec<Vec<f64>> = rhs.to_vec();
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    if n > 1 {
        c[0] = upper[0] / denom;
    }
    for col in d.iter_mut() {
        col[0] /= denom;
    }
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        if i + 1 < n {
            c[i] = upper[i] / denom;
        }
        for col in d.iter_mut() {
            col[i] = (col[i] - lower[i] * col[i - 1]) / denom;
        }
    }
    for col in d.iter_mut() {
        for i in (0..n.saturating_sub(1)).rev() {
            col[i] -= c[i] * col[i + 1];
        }
    }
    Some(d)
}

/// Dense LU solve with partial pivoting for one or more right-hand sides.
/// Returns `None` when the matrix is singular.
pub fn solve_dense(a: DMatrix<f64>, rhs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let lu = a.lu();
    rhs.iter()
        .map(|b| lu.solve(&DVector::from_column_slice(b)).map(|x| x.as_slice().to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1.0, 1e-16, 1e-16, -1.0];
        assert_eq!(compensated_sum(xs), 2e-16);
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn thomas_matches_dense() {
        let n = 6;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.4 + 0.02 * i as f64).collect();
        let diag = vec![1.5; n];
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, std::slice::from_ref(&b)).unwrap();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = diag[i];
            if i > 0 {
                a[(i, i - 1)] = lower[i];
            }
            if i + 1 < n {
                a[(i, i + 1)] = upper[i];
            }
        }
        let y = solve_dense(a, &[b]).unwrap();
        for (p, q) in x[0].iter().zip(&y[0]) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_systems_are_reported() {
        assert!(solve_tridiagonal(&[0.0], &[0.0], &[0.0], &[vec![1.0]]).is_none());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve_dense(a, &[vec![1.0, 1.0]]).is_none());
    }
}
