//! Modified Bessel functions `I_n` (log domain) and `K_0`.

use super::gamma::ln_gamma;
use super::LogDensity;
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Orders at or above this use the uniform (Debye) expansion.
const DEBYE_MIN_ORDER: u32 = 30;
const DEBYE_TERMS: usize = 16;

/// `ln I_n(z)`.
pub fn bessel_i_log(n: u32, z: f64) -> LogDensity {
    if z == 0.0 {
        return if n == 0 { LogDensity::ONE } else { LogDensity::ZERO };
    }
    LogDensity::new(bessel_i_log_scaled(n, z) + z)
}

/// `ln I_n(z) - z`, finite and well scaled even when `I_n(z)` overflows.
pub fn bessel_i_log_scaled(n: u32, z: f64) -> f64 {
    debug_assert!(z >= 0.0 && z.is_finite());
    if z == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if n >= DEBYE_MIN_ORDER {
        debye_scaled(n as f64, z)
    } else if z <= hankel_crossover(n) {
        series_ln(n, z) - z
    } else {
        hankel_scaled(n as f64, z)
    }
}

fn hankel_crossover(n: u32) -> f64 {
    let nf = n as f64;
    (nf * nf).max(30.0)
}

/// `ln I_n(z)` from the defining power series, rescaled to avoid overflow.
///
/// Valid for every `z` but costs `O(z)` terms; used on small arguments and as a
/// reference route.
pub fn bessel_i_series_log(n: u32, z: f64) -> LogDensity {
    if z == 0.0 {
        return if n == 0 { LogDensity::ONE } else { LogDensity::ZERO };
    }
    LogDensity::new(series_ln(n, z))
}

fn series_ln(n: u32, z: f64) -> f64 {
    const RESCALE: f64 = 1e280;
    let q = 0.25 * z * z;
    let nf = n as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_scale = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (nf + k));
        sum += term;
        if term < 1e-17 * sum && k > q.sqrt() {
            break;
        }
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        k += 1.0;
    }
    nf * (0.5 * z).ln() - ln_gamma(nf + 1.0) + sum.ln() + ln_scale
}

fn hankel_scaled(nu: f64, z: f64) -> f64 {
    let four_nu2 = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (four_nu2 - odd * odd) / (k * 8.0 * z);
        if next.abs() >= term.abs() && k > nu {
            break;
        }
        sum += next;
        if next.abs() < 1e-17 * sum.abs() || next == 0.0 {
            break;
        }
        term = next;
        k += 1.0;
    }
    sum.ln() - 0.5 * (2.0 * PI * z).ln()
}

/// Polynomial coefficients (ascending powers of `t`) of the Debye `u_k(t)`.
fn debye_polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS {
            let u = &polys[k];
            let mut next = vec![0.0; u.len() + 3];
            for (j, &c) in u.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let jf = j as f64;
                // ½ t²(1 - t²) u'(t)
                if j > 0 {
                    next[j + 1] += 0.5 * jf * c;
                    next[j + 3] -= 0.5 * jf * c;
                }
                // ⅛ ∫₀ᵗ (1 - 5s²) u(s) ds
                next[j + 1] += c / (8.0 * (jf + 1.0));
                next[j + 3] -= 5.0 * c / (8.0 * (jf + 3.0));
            }
            polys.push(next);
        }
        polys
    })
}

fn debye_scaled(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let root = z.hypot(1.0);
    let t = 1.0 / root;
    // nu * eta - x, with eta = sqrt(1+z²) + ln(z / (1 + sqrt(1+z²)))
    let eta_minus_z = 1.0 / (root + z) - (1.0 / z).asinh();
    let mut sum = 0.0;
    let mut inv_nu_k = 1.0;
    for poly in debye_polys() {
        let val = poly.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        let term = val * inv_nu_k;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        inv_nu_k /= nu;
    }
    nu * eta_minus_z - 0.5 * (2.0 * PI * nu).ln() - 0.5 * root.ln() + sum.ln()
}

/// `K_0(z)` for `z > 0`. Underflows to zero beyond `z ≈ 745`.
pub fn bessel_k0(z: f64) -> Result<f64> {
    Ok(bessel_k0_scaled(z)? * (-z).exp())
}

/// `e^z K_0(z)` for `z > 0`.
pub fn bessel_k0_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("K0 needs a finite z > 0, got {z}")));
    }
    if z <= 2.0 {
        Ok(k0_series(z) * z.exp())
    } else {
        Ok(k0_steed(z))
    }
}

fn k0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harm_sum = 0.0;
    let mut h = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        h += 1.0 / k;
        i0 += term;
        harm_sum += term * h;
        if term < 1e-18 * i0 {
            break;
        }
        k += 1.0;
    }
    -((0.5 * z).ln() + EULER_GAMMA) * i0 + harm_sum
}

/// Steed's continued fraction for `e^z K_0(z)`, effective for `z > 2`.
fn k0_steed(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..100_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() / s
}
