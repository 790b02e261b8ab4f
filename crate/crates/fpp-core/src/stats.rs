//! Small statistical toolbox shared by the Monte Carlo drivers.
//!
//! Replica means get Student-t confidence intervals, binomial proportions
//! get Wilson intervals, regression slopes get heteroscedasticity-robust
//! (HC1) standard errors, and sampler correctness is checked with a
//! Kolmogorov-Smirnov statistic against the analytic CDF.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Unbiased sample variance (divisor n - 1); 0 when fewer than two points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided Student-t quantile at probability `p` with `df` degrees of
/// freedom.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("valid t parameters")
        .inverse_cdf(p)
}

/// Half-width of the 95% Student-t confidence interval for the mean of
/// `n` replicas with sample standard deviation `sd`.  A single replica
/// has no internal error estimate, so the interval is infinite.
pub fn t_ci_half(sd: f64, n: usize) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    t_quantile(0.975, (n - 1) as f64) * sd / (n as f64).sqrt()
}

/// Mean and 95% CI half-width of a replica sample.
pub fn mean_with_ci(xs: &[f64]) -> (f64, f64) {
    (mean(xs), t_ci_half(sample_variance(xs).sqrt(), xs.len()))
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0, "Wilson interval needs at least one trial");
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // At the boundary proportions one interval endpoint is exactly the
    // boundary (a root of the score equation); pin it against roundoff.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Ordinary least squares fit y = intercept + slope * x with an HC1
/// heteroscedasticity-robust standard error on the slope.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// HC1 robust standard error of the slope.
    pub slope_se: f64,
    /// Residual degrees of freedom (points - 2).
    pub df: usize,
}

impl OlsFit {
    /// 95% confidence interval for the slope using the t distribution.
    pub fn slope_ci(&self) -> (f64, f64) {
        if self.df == 0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let half = t_quantile(0.975, self.df as f64) * self.slope_se;
        (self.slope - half, self.slope + half)
    }
}

/// Fit a line through (x, y) points; needs at least three points for a
/// meaningful robust error.  Returns None with fewer than two points or
/// degenerate x.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Option<OlsFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let xm = mean(x);
    let ym = mean(y);
    let sxx: f64 = x.iter().map(|&v| (v - xm) * (v - xm)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    // HC1: sum (x - xm)^2 e^2 / sxx^2, inflated by n / (n - 2).
    let df = n.saturating_sub(2);
    let mut meat = 0.0;
    for i in 0..n {
        let e = y[i] - intercept - slope * x[i];
        meat += (x[i] - xm) * (x[i] - xm) * e * e;
    }
    let se = if df > 0 {
        ((n as f64 / df as f64) * meat).sqrt() / sxx
    } else {
        f64::INFINITY
    };
    Some(OlsFit { slope, intercept, slope_se: se, df })
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against an analytic
/// CDF.  `cdf(x)` is P(X <= x) and `cdf_left(x)` is P(X < x); the left
/// limit makes the statistic exact for laws with atoms.
pub fn ks_statistic(
    samples: &mut [f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let hi = (i + 1) as f64 / n - cdf(x);
        let lo = cdf_left(x) - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Critical value of the two-sided KS test at significance `alpha` for
/// sample size `n` (asymptotic Kolmogorov formula).
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
