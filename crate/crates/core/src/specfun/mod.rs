//! Numerically stable special functions.
//!
//! Everything that can overflow for large sample lengths is computed in the log
//! domain and carried as a [`LogDensity`].

mod bessel;
mod chi2;
mod gamma;
mod marcum;

pub use bessel::{bessel_i_log, bessel_i_log_scaled, bessel_i_series_log, bessel_k0, bessel_k0_scaled};
pub use chi2::{
    central_chi2_ln_pdf, central_chi2_pdf, noncentral_chi2_cdf, noncentral_chi2_pdf_log,
    noncentral_chi2_pdf_log_series, noncentral_chi2_sf,
};
pub use gamma::{gamma_p, gamma_q, ln_gamma, ln_gamma_p, ln_gamma_q, ln_poisson_pmf, log1pmx};
pub(crate) use marcum::tails_for_energy;
pub use marcum::{marcum_p, marcum_q, marcum_tails, MarcumTails};

/// Natural log of a nonnegative quantity; `-inf` encodes an exact zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogDensity {
    pub value: f64,
}

impl LogDensity {
    pub const ZERO: LogDensity = LogDensity {
        value: f64::NEG_INFINITY,
    };
    pub const ONE: LogDensity = LogDensity { value: 0.0 };

    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan(), "log value is NaN");
        LogDensity { value }
    }

    pub fn from_linear(x: f64) -> Self {
        debug_assert!(x >= 0.0);
        LogDensity { value: x.ln() }
    }

    pub fn exp(self) -> f64 {
        self.value.exp()
    }

    pub fn is_zero(self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    shift: f64,
    sum: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        LogSum {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub(crate) fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.shift {
            self.sum = self.sum * (self.shift - ln_term).exp() + 1.0;
            self.shift = ln_term;
        } else {
            self.sum += (ln_term - self.shift).exp();
        }
    }

    pub(crate) fn ln(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.shift + self.sum.ln()
        }
    }
}

/// `ln(1 - exp(x))` for `x <= 0`, accurate near both ends.
pub(crate) fn ln1mexp(x: f64) -> f64 {
    debug_assert!(x <= 0.0);
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}
