//! Bracketed bisection.

use crate::error::{Error, Result};

/// Bisection for an increasing-or-decreasing `f` with `f(lo)` and `f(hi)` of
/// opposite sign. Stops when `|f| <= f_tol` or the bracket can no longer be
/// halved in floating point; returns the best point seen.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, f_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo:e}, {f_hi:e}"
        )));
    }
    let mut best = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            break;
        }
        let fm = f(mid)?;
        if fm.is_nan() {
            return Err(Error::Convergence(format!("NaN at {mid}")));
        }
        if fm.abs() < best.1.abs() {
            best = (mid, fm);
        }
        if fm.abs() <= f_tol {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}
