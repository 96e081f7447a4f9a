//! Small statistical toolbox: Gaussian tail functions, confidence bounds,
//! Kolmogorov–Smirnov distance, and running moment accumulators.
//!
//! Everything here is deterministic and allocation-free so it can back both
//! Monte Carlo estimators and test oracles.

/// Gaussian upper-tail probability `Q(x) = Pr(Z > x)` for a standard normal `Z`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_func`] on (0, 1), solved by bisection + Newton polish.
///
/// Accurate to ~1e-13; used by test oracles to invert Gaussian tail targets.
pub fn inv_q(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "inv_q argument must lie in (0,1)");
    // Bracket: Q is decreasing; Q(-40) ~ 1, Q(40) ~ 0.
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if q_func(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = q_func(x) - p;
        let d = -normal_pdf(x);
        if d.abs() > 0.0 {
            x -= f / d;
        }
    }
    x
}

/// Upper limit of the Wilson score interval for a binomial proportion.
///
/// `z` is the one-sided normal quantile (1.96 for the 95% two-sided /
/// 97.5% one-sided bound conventionally used here).
pub fn wilson_upper(successes: u64, trials: u64, z: f64) -> f64 {
    assert!(trials > 0, "wilson_upper needs at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let margin = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center + margin) / denom).min(1.0)
}

/// Kolmogorov–Smirnov distance between an empirical sample and a reference CDF.
///
/// Sorts the sample in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    assert!(!sample.is_empty());
    sample.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = sample.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sample.iter().enumerate() {
        let c = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((c - lo).abs()).max((hi - c).abs());
    }
    d
}

/// Mean of a normal distribution truncated to `[lo, hi]`.
///
/// Falls back to the nearer boundary when the untruncated mass inside the
/// interval underflows.
pub fn truncated_normal_mean(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    if sigma <= 0.0 {
        return mu.clamp(lo, hi);
    }
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    let mass = normal_cdf(b) - normal_cdf(a);
    if mass <= 1e-300 {
        // Essentially all mass beyond one boundary.
        return if mu < lo { lo } else { hi };
    }
    mu + sigma * (normal_pdf(a) - normal_pdf(b)) / mass
}

/// Running mean / variance accumulator (Welford).
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    /// Half-width of the normal-approximation 95% confidence interval.
    pub fn ci95(&self) -> f64 {
        1.96 * self.std_error()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_func_reference_points() {
        assert!((q_func(0.0) - 0.5).abs() < 1e-15);
        // 2Q(3) ~ 0.0026998
        assert!((2.0 * q_func(3.0) - 0.002699796).abs() < 1e-8);
        assert!((2.0 * q_func(1.5) - 0.133614).abs() < 1e-5);
    }

    #[test]
    fn inv_q_round_trips() {
        for &p in &[1e-6, 1e-3, 0.01, 0.25, 0.5, 0.9] {
            let x = inv_q(p);
            assert!((q_func(x) - p).abs() < 1e-12, "p={p}");
        }
        assert!((inv_q(0.005) - 2.575829).abs() < 1e-5);
    }

    #[test]
    fn wilson_upper_behaves() {
        // Zero failures still leaves an upper bound above zero.
        let u = wilson_upper(0, 1000, 1.96);
        assert!(u > 0.0 && u < 0.01);
        // Bound shrinks with trial count.
        assert!(wilson_upper(10, 10_000, 1.96) < wilson_upper(10, 1_000, 1.96));
    }

    #[test]
    fn ks_statistic_uniform_grid() {
        // A perfect uniform grid against the uniform CDF has distance 1/(2n).
        let n = 100;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn truncated_normal_mean_limits() {
        // Symmetric truncation keeps the mean.
        assert!((truncated_normal_mean(0.0, 1.0, -2.0, 2.0)).abs() < 1e-15);
        // Far-away window collapses to the boundary.
        assert!((truncated_normal_mean(-50.0, 1.0, -1.0, 1.0) + 1.0).abs() < 1e-12);
        // One-sided truncation of a standard normal at 0: mean = sqrt(2/pi).
        let m = truncated_normal_mean(0.0, 1.0, 0.0, 1e9);
        assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn running_stats_matches_direct() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let mut rs = RunningStats::new();
        for &x in &xs {
            rs.push(x);
        }
        assert!((rs.mean() - 3.75).abs() < 1e-12);
        let var = xs.iter().map(|x| (x - 3.75) * (x - 3.75)).sum::<f64>() / 3.0;
        assert!((rs.variance() - var).abs() < 1e-12);
    }
}
