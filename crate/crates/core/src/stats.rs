//! Small statistics toolkit: intervals, goodness-of-fit and running moments.

use crate::specfun::gamma_q;
use rayon::prelude::*;

/// Two-sided 95% standard-normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Wilson score interval for `k` successes out of `n` (possibly an effective, non-integer `n`).
pub fn wilson_interval(k: f64, n: f64, z: f64) -> (f64, f64) {
    if n <= 0.0 {
        return (0.0, 1.0);
    }
    let p = k / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// One-sample Kolmogorov–Smirnov statistic of a sorted sample against `cdf`.
pub fn ks_statistic_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Upper bound on the one-sample KS statistic that evaluates `cdf` only at
/// every `stride`-th order statistic (and the last). Between evaluated points
/// the CDF is bracketed by monotonicity, so the bound exceeds the exact
/// statistic by at most `stride/n` plus the CDF increment across a stride.
pub fn ks_statistic_sorted_upper(sorted: &[f64], cdf: impl Fn(f64) -> f64 + Sync, stride: usize) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().expect("nonempty") != n - 1 {
        idx.push(n - 1);
    }
    let f: Vec<f64> = idx.par_iter().map(|&i| cdf(sorted[i])).collect();
    let nf = n as f64;
    let mut d: f64 = (f[0] - 0.0).max(1.0 / nf - f[0]);
    for w in 0..idx.len() - 1 {
        let (a, b) = (idx[w], idx[w + 1]);
        // samples a..=b have F in [f[w], f[w+1]]
        d = d.max((b as f64 + 1.0) / nf - f[w]).max(f[w + 1] - a as f64 / nf);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic. Both slices must be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of a KS statistic `d` with effective sample size `n_eff`.
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper tail of the chi-squared law with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    if stat <= 0.0 {
        1.0
    } else {
        gamma_q(0.5 * dof, 0.5 * stat)
    }
}

/// Pearson goodness-of-fit over cells; cells with expected count below
/// `min_expected` are pooled in order until they reach it.
/// Returns `(statistic, degrees_of_freedom, p_value)`.
pub fn pearson_chi_square(observed: &[f64], expected: &[f64], min_expected: f64) -> (f64, f64, f64) {
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        po += o;
        pe += e;
        if pe >= min_expected {
            pooled.push((po, pe));
            po = 0.0;
            pe = 0.0;
        }
    }
    if pe > 0.0 || po > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += po;
                last.1 += pe;
            }
            None => pooled.push((po, pe)),
        }
    }
    let stat: f64 = pooled.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = (pooled.len() as f64 - 1.0).max(1.0);
    (stat, dof, chi_square_sf(stat, dof))
}

/// Two-sided p-value of the pooled two-proportion z-test.
pub fn two_proportion_pvalue(k1: f64, n1: f64, k2: f64, n2: f64) -> f64 {
    let p = (k1 + k2) / (n1 + n2);
    let se = (p * (1.0 - p) * (1.0 / n1 + 1.0 / n2)).sqrt();
    if se == 0.0 {
        return 1.0;
    }
    let z = (k1 / n1 - k2 / n2).abs() / se;
    2.0 * (1.0 - normal_cdf(z))
}

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two accumulators (Chan et al. parallel update).
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
