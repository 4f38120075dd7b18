//! Central and noncentral chi-squared laws.

use super::bessel::bessel_i_log_scaled;
use super::gamma::{ln_gamma, ln_poisson_pmf};
use super::marcum::tails_half_squares;
use super::{LogDensity, LogSum};
use crate::error::{invalid, Error, Result};
use std::f64::consts::LN_2;

/// Log density of the central chi-squared law with `k` degrees of freedom.
pub fn central_chi2_ln_pdf(x: f64, k: u32) -> Result<LogDensity> {
    if k == 0 {
        return Err(invalid("chi-squared degrees of freedom must be positive"));
    }
    if x < 0.0 {
        return Ok(LogDensity::ZERO);
    }
    if x == 0.0 {
        return match k {
            1 => Err(Error::Divergent("chi-squared density with k = 1 at x = 0".into())),
            2 => Ok(LogDensity::new(-LN_2)),
            _ => Ok(LogDensity::ZERO),
        };
    }
    let half_k = 0.5 * k as f64;
    Ok(LogDensity::new(
        (half_k - 1.0) * x.ln() - 0.5 * x - half_k * LN_2 - ln_gamma(half_k),
    ))
}

/// Density of the central chi-squared law with `k` degrees of freedom.
pub fn central_chi2_pdf(x: f64, k: u32) -> Result<f64> {
    Ok(central_chi2_ln_pdf(x, k)?.exp())
}

fn check_noncentral(k: u32, lambda: f64) -> Result<()> {
    if k == 0 || k % 2 == 1 {
        return Err(invalid(format!(
            "noncentral chi-squared degrees of freedom must be positive and even, got {k}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("noncentrality must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Log density of the noncentral chi-squared law (even `k`), Bessel form.
pub fn noncentral_chi2_pdf_log(x: f64, k: u32, lambda: f64) -> Result<LogDensity> {
    check_noncentral(k, lambda)?;
    if lambda == 0.0 {
        return central_chi2_ln_pdf(x, k);
    }
    if x < 0.0 {
        return Ok(LogDensity::ZERO);
    }
    if x == 0.0 {
        return Ok(if k == 2 {
            LogDensity::new(-LN_2 - 0.5 * lambda)
        } else {
            LogDensity::ZERO
        });
    }
    let order = k / 2 - 1;
    let gap = x.sqrt() - lambda.sqrt();
    let ln_ratio = if order == 0 {
        0.0
    } else {
        0.5 * order as f64 * (x / lambda).ln()
    };
    Ok(LogDensity::new(
        -LN_2 - 0.5 * gap * gap + ln_ratio + bessel_i_log_scaled(order, (lambda * x).sqrt()),
    ))
}

/// Log density of the noncentral chi-squared law as a Poisson mixture of
/// central laws. Slower than [`noncentral_chi2_pdf_log`]; kept as an
/// independent route.
pub fn noncentral_chi2_pdf_log_series(x: f64, k: u32, lambda: f64) -> Result<LogDensity> {
    check_noncentral(k, lambda)?;
    if lambda == 0.0 || x <= 0.0 {
        return noncentral_chi2_pdf_log(x, k, lambda);
    }
    let h = 0.5 * lambda;
    let term = |i: f64| -> f64 {
        let dof = k as f64 + 2.0 * i;
        let half = 0.5 * dof;
        ln_poisson_pmf(i, h) + (half - 1.0) * x.ln() - 0.5 * x - half * LN_2 - ln_gamma(half)
    };
    Ok(LogDensity::new(sum_log_concave(h.floor(), term)))
}

/// `ln Σ_{i≥0} e^{f(i)}` for a log-concave sequence, summed outwards from `start`.
pub(crate) fn sum_log_concave(start: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = LogSum::new();
    let first = f(start);
    acc.add(first);
    for dir in [1.0, -1.0] {
        let mut i = start;
        let mut prev = first;
        loop {
            i += dir;
            if i < 0.0 {
                break;
            }
            let t = f(i);
            acc.add(t);
            if t == f64::NEG_INFINITY {
                break;
            }
            if t < prev {
                let ratio = (t - prev).exp();
                if t + ratio.ln() - (-ratio).ln_1p() < acc.ln() - 39.0 {
                    break;
                }
            }
            prev = t;
        }
    }
    acc.ln()
}

/// CDF of the noncentral chi-squared law: `1 - Q_{k/2}(√λ, √x)`.
pub fn noncentral_chi2_cdf(x: f64, k: u32, lambda: f64) -> Result<f64> {
    check_noncentral(k, lambda)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(tails_half_squares(k / 2, 0.5 * lambda, 0.5 * x).p())
}

/// Survival function of the noncentral chi-squared law: `Q_{k/2}(√λ, √x)`.
pub fn noncentral_chi2_sf(x: f64, k: u32, lambda: f64) -> Result<f64> {
    check_noncentral(k, lambda)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(tails_half_squares(k / 2, 0.5 * lambda, 0.5 * x).q())
}
