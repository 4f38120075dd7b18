//! Log-gamma helpers, Poisson weights and the regularized incomplete gamma functions.

use super::ln1mexp;
use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MAX_ITER: usize = 1_000_000;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Remainder of Stirling's series: `ln Γ(s) - [(s - ½) ln s - s + ½ ln 2π]`.
fn stirling_corr(s: f64) -> f64 {
    if s >= 10.0 {
        let r = 1.0 / s;
        let r2 = r * r;
        r * (1.0 / 12.0
            + r2 * (-1.0 / 360.0
                + r2 * (1.0 / 1260.0
                    + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 / 156.0))))))
    } else {
        ln_gamma(s) - ((s - 0.5) * s.ln() - s + LN_SQRT_2PI)
    }
}

/// `ln(1 + t) - t` without cancellation for small `t`.
pub fn log1pmx(t: f64) -> f64 {
    if t.abs() < 0.5 {
        // ln(1+t) = 2 atanh(r) with r = t / (2 + t); 2r - t = -2r^2 / (1 - r).
        let r = t / (2.0 + t);
        let r2 = r * r;
        let mut term = r * r2;
        let mut odd = 0.0;
        let mut k = 3.0;
        loop {
            let add = term / k;
            odd += add;
            if add.abs() <= 1e-17 * odd.abs() {
                break;
            }
            term *= r2;
            k += 2.0;
        }
        2.0 * odd - 2.0 * r2 / (1.0 - r)
    } else {
        t.ln_1p() - t
    }
}

/// `ln(h^k e^{-h} / Γ(k + 1))` for real `k ≥ 0`, `h ≥ 0`.
///
/// For integer `k` this is the Poisson log-probability; for real `k` it is the
/// prefactor of the incomplete gamma expansions.
pub fn ln_poisson_pmf(k: f64, h: f64) -> f64 {
    if h == 0.0 {
        return if k == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0.0 {
        return -h;
    }
    if k < 1.0 {
        return k * h.ln() - h - ln_gamma(k + 1.0);
    }
    k * log1pmx((h - k) / k) - 0.5 * (2.0 * PI * k).ln() - stirling_corr(k)
}

fn ln_p_series(s: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    for _ in 0..MAX_ITER {
        term *= x / (s + k);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    ln_poisson_pmf(s, x) + sum.ln()
}

fn ln_q_contfrac(s: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        let an = -fi * (fi - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    // x^s e^{-x} / Γ(s) = s · x^s e^{-x} / Γ(s+1)
    s.ln() + ln_poisson_pmf(s, x) + h.ln()
}

/// `ln P(s, x)`, the log of the regularized lower incomplete gamma function.
pub fn ln_gamma_p(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0 && x >= 0.0);
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < s + 1.0 {
        ln_p_series(s, x)
    } else {
        ln1mexp(ln_q_contfrac(s, x))
    }
}

/// `ln Q(s, x)`, the log of the regularized upper incomplete gamma function.
pub fn ln_gamma_q(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0 && x >= 0.0);
    if x == 0.0 {
        0.0
    } else if x < s + 1.0 {
        ln1mexp(ln_p_series(s, x))
    } else {
        ln_q_contfrac(s, x)
    }
}

/// Regularized lower incomplete gamma function `P(s, x)`.
pub fn gamma_p(s: f64, x: f64) -> f64 {
    ln_gamma_p(s, x).exp()
}

/// Regularized upper incomplete gamma function `Q(s, x) = 1 - P(s, x)`.
pub fn gamma_q(s: f64, x: f64) -> f64 {
    ln_gamma_q(s, x).exp()
}
