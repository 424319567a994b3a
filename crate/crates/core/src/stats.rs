//! Goodness-of-fit helpers.

/// One-sample Kolmogorov-Smirnov statistic `sup_t |F_n(t) − F(t)|` for
/// samples in ascending order.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Asymptotic p-value `P(K > sqrt(n)·d)` of the Kolmogorov distribution,
/// with the usual small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * t * t).exp();
        acc += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    acc.clamp(0.0, 1.0)
}

/// CDF of `Exp(1)`.
pub fn exp1_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t).exp_m1()
    }
}

/// CDF of the sum of independent `Exp(1)` and `Exp(2)`, i.e. the maximum of two
/// independent `Exp(1)` variables.
pub fn hypoexp_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        let e = exp1_cdf(t);
        e * e
    }
}
