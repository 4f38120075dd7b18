//! Generalized Marcum Q-function of integer order.
//!
//! `Q_M(a, b)` is evaluated as the Poisson mixture
//! `Σ_i Pois(i; a²/2) · Q(M + i, b²/2)` of regularized upper incomplete gamma
//! functions, and `1 - Q_M` as the same mixture of lower ones. Only the smaller
//! of the two tails is summed; the other is its complement. The sum starts at
//! the Poisson mode and walks outwards, moving between neighbouring orders with
//! the incomplete-gamma recurrences.

use super::gamma::{ln_gamma_p, ln_gamma_q, ln_poisson_pmf};
use super::ln1mexp;
use crate::error::{invalid, Result};

/// Both tails of the Marcum Q-function in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcumTails {
    /// `ln Q_M(a, b)`
    pub ln_q: f64,
    /// `ln (1 - Q_M(a, b))`
    pub ln_p: f64,
}

impl MarcumTails {
    pub fn q(&self) -> f64 {
        self.ln_q.exp()
    }

    pub fn p(&self) -> f64 {
        self.ln_p.exp()
    }
}

/// `Q_M(a, b)`.
pub fn marcum_q(m: u32, a: f64, b: f64) -> Result<f64> {
    Ok(marcum_tails(m, a, b)?.q())
}

/// `1 - Q_M(a, b)`, accurate when `Q_M` is close to one.
pub fn marcum_p(m: u32, a: f64, b: f64) -> Result<f64> {
    Ok(marcum_tails(m, a, b)?.p())
}

/// Both tails of `Q_M(a, b)`.
pub fn marcum_tails(m: u32, a: f64, b: f64) -> Result<MarcumTails> {
    if m == 0 {
        return Err(invalid("Marcum Q order must be at least 1"));
    }
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!(
            "Marcum Q arguments must be finite and nonnegative, got a={a}, b={b}"
        )));
    }
    Ok(tails_half_squares(m, 0.5 * a * a, 0.5 * b * b))
}

/// Marcum tails parameterized by `h = a²/2` and `x = b²/2`.
pub(crate) fn tails_half_squares(m: u32, h: f64, x: f64) -> MarcumTails {
    let mf = m as f64;
    if x == 0.0 {
        return MarcumTails {
            ln_q: 0.0,
            ln_p: f64::NEG_INFINITY,
        };
    }
    if h == 0.0 {
        return MarcumTails {
            ln_q: ln_gamma_q(mf, x),
            ln_p: ln_gamma_p(mf, x),
        };
    }
    let upper = x > mf + h;
    let direct = mixture_ln(mf, h, x, upper);
    let other = ln1mexp(direct.min(0.0));
    if upper {
        MarcumTails {
            ln_q: direct.min(0.0),
            ln_p: other,
        }
    } else {
        MarcumTails {
            ln_q: other,
            ln_p: direct.min(0.0),
        }
    }
}

const REANCHOR_EVERY: usize = 256;
const MAX_REL_ERR: f64 = 1e-13;
const EPS: f64 = 1.2e-16;
/// Stop once the bounded remainder of a walk is below 1e-17 of the sum.
const TAIL_TOL: f64 = 1e-17;
const BIG: f64 = 1e200;
const TINY: f64 = 1e-200;

/// Running sum stored as `s · e^{ln_base}`.
struct ScaledSum {
    ln_base: f64,
    s: f64,
}

impl ScaledSum {
    fn ln(&self) -> f64 {
        self.ln_base + self.s.ln()
    }
}

/// One outward walk over the mixture index. Weights and incomplete-gamma
/// values are carried in linear form relative to logarithmic bases that are
/// moved whenever a value drifts towards overflow or underflow.
struct Walk<'a> {
    m: f64,
    h: f64,
    x: f64,
    upper: bool,
    up: bool,
    i: f64,
    ln_wb: f64,
    w: f64,
    ln_gb: f64,
    g: f64,
    /// D(s) for the next step: s = m + i going up, s = m + i - 1 going down.
    d: f64,
    err: f64,
    /// e^{ln_wb + ln_gb - sum.ln_base}
    tf: f64,
    sum: &'a mut ScaledSum,
}

impl Walk<'_> {
    fn ln_g_direct(&self, s: f64) -> f64 {
        if self.upper {
            ln_gamma_q(s, self.x)
        } else {
            ln_gamma_p(s, self.x)
        }
    }

    fn next_d_order(&self) -> f64 {
        if self.up {
            self.m + self.i
        } else {
            self.m + self.i - 1.0
        }
    }

    fn refresh_tf(&mut self) {
        self.tf = (self.ln_wb + self.ln_gb - self.sum.ln_base).exp();
    }

    fn rebase_g(&mut self, ln_new: f64) {
        let f = (self.ln_gb - ln_new).exp();
        self.g *= f;
        self.d *= f;
        self.ln_gb = ln_new;
        self.refresh_tf();
    }

    fn rebase_w(&mut self) {
        let ln_new = self.ln_wb + self.w.ln();
        self.w = 1.0;
        self.ln_wb = ln_new;
        self.refresh_tf();
    }

    /// Advances one index; returns false when the walk is exhausted.
    fn step(&mut self, steps: usize) -> bool {
        let stable = self.up == self.upper;
        let s_old = self.m + self.i;
        // G at the new order
        let mut reanchor_g = false;
        if stable {
            self.g += self.d;
        } else {
            let r = self.d / self.g;
            if r < 0.999 {
                self.err = (self.err + EPS * (1.0 + r)) / (1.0 - r);
                self.g -= self.d;
                reanchor_g = self.err > MAX_REL_ERR;
            } else {
                reanchor_g = true;
            }
        }
        if self.up {
            self.i += 1.0;
            self.w *= self.h / self.i;
        } else {
            self.w *= self.i / self.h;
            self.i -= 1.0;
        }
        let s_new = self.m + self.i;
        let anchor = steps.is_multiple_of(REANCHOR_EVERY);
        if reanchor_g {
            let ln_g = self.ln_g_direct(s_new);
            self.g = (ln_g - self.ln_gb).exp();
            self.err = EPS;
            if !(self.g > TINY && self.g < BIG) {
                self.g = 1.0;
                let old = self.ln_gb;
                self.ln_gb = ln_g;
                self.d *= (old - ln_g).exp();
                self.refresh_tf();
            }
        }
        // D for the following step
        let d_order = self.next_d_order();
        if anchor {
            self.w = (ln_poisson_pmf(self.i, self.h) - self.ln_wb).exp();
            self.d = (ln_poisson_pmf(d_order, self.x) - self.ln_gb).exp();
        } else if self.up {
            self.d *= self.x / (s_old + 1.0);
        } else {
            self.d *= (s_old - 1.0) / self.x;
        }
        if self.g > BIG || (self.g < TINY && self.g > 0.0) {
            let ln_new = self.ln_gb + self.g.ln();
            self.rebase_g(ln_new);
        }
        if self.w < TINY && self.w > 0.0 {
            self.rebase_w();
        }
        true
    }

    fn term(&self) -> f64 {
        self.tf * self.w * self.g
    }

    fn add(&mut self, t: f64) {
        self.sum.s += t;
        if self.sum.s > BIG {
            self.sum.s /= BIG;
            self.sum.ln_base += BIG.ln();
            self.refresh_tf();
        }
    }

    fn run(&mut self, first: f64) {
        let mut prev = first;
        let mut steps = 0usize;
        loop {
            if !self.up && self.i <= 0.0 {
                break;
            }
            steps += 1;
            self.step(steps);
            let t = self.term();
            // compare against prev in the current sum base
            self.add(t);
            let t = self.term();
            if t == 0.0 || !t.is_finite() {
                break;
            }
            if t < prev {
                let r = t / prev;
                if t * r / (1.0 - r) < TAIL_TOL * self.sum.s {
                    break;
                }
            }
            prev = t;
        }
    }
}

/// `ln Σ_i Pois(i; h) G(m + i, x)` with `G` the upper (`upper = true`) or lower
/// regularized incomplete gamma function.
fn mixture_ln(m: f64, h: f64, x: f64, upper: bool) -> f64 {
    let i0 = h.floor();
    let ln_w0 = ln_poisson_pmf(i0, h);
    let ln_g0 = if upper {
        ln_gamma_q(m + i0, x)
    } else {
        ln_gamma_p(m + i0, x)
    };
    if ln_g0 == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = ScaledSum {
        ln_base: ln_w0 + ln_g0,
        s: 1.0,
    };
    for up in [true, false] {
        if !up && i0 == 0.0 {
            continue;
        }
        let d_order = if up { m + i0 } else { m + i0 - 1.0 };
        let mut walk = Walk {
            m,
            h,
            x,
            upper,
            up,
            i: i0,
            ln_wb: ln_w0,
            w: 1.0,
            ln_gb: ln_g0,
            g: 1.0,
            d: (ln_poisson_pmf(d_order, x) - ln_g0).exp(),
            err: EPS,
            tf: 0.0,
            sum: &mut sum,
        };
        walk.refresh_tf();
        let first = walk.term();
        walk.run(first);
    }
    sum.ln()
}

/// Tails of `Y` given gain `g`: `Q_N(√(2NgĒ/σ²), √(2Nt/σ²))` and its complement.
pub(crate) fn tails_for_energy(t: f64, g: f64, link: &crate::LinkParams) -> MarcumTails {
    let half = link.n_samples as f64 / link.sigma2;
    tails_half_squares(link.n_samples, half * g * link.e_bar, half * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_case_is_incomplete_gamma() {
        let t = tails_half_squares(1, 0.0, 2.0);
        assert!((t.q() - f64::exp(-2.0)).abs() < 1e-16);
    }

    #[test]
    fn both_tails_sum_to_one() {
        for &(m, h, x) in &[(1, 0.5, 0.5), (20, 20.0, 40.0), (150, 150.0, 347.0), (5, 300.0, 10.0)] {
            let t = tails_half_squares(m, h, x);
            assert!((t.q() + t.p() - 1.0).abs() < 1e-14, "{m} {h} {x}");
        }
    }
}
