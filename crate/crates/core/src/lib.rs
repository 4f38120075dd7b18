//! Bit-error-rate analysis of ambient backscatter links under flat Rayleigh fading.
//!
//! The crate is layered bottom-up:
//!
//! * [`specfun`]: log-domain special functions (Bessel, Marcum Q, chi-squared laws).
//! * [`quadrature`] and [`roots`]: adaptive Gauss–Kronrod integration and bracketed bisection.
//! * [`fading`]: the correlated gain pair `(mu, nu)`, its joint density and a sampler.
//! * [`energy_stats`]: conditional laws of the averaged received energy `Y`.
//! * [`detection`]: the four decision thresholds.
//! * [`ber`]: conditional and fading-averaged error probabilities.
//! * [`simkit`]: a symbol-level Monte Carlo oracle for everything above.
//! * [`stats`]: goodness-of-fit and interval helpers used by the oracle and the tests.

pub mod ber;
pub mod detection;
pub mod energy_stats;
mod error;
pub mod fading;
pub mod quadrature;
pub mod roots;
pub mod simkit;
pub mod specfun;
pub mod stats;

pub use ber::{BerEstimate, BerMethod, ReceiverKind};
pub use detection::{DetectionStrategy, Threshold};
pub use energy_stats::{HypothesisGain, LinkParams};
pub use error::{Error, Result};
pub use fading::{AlphaConvention, ChannelPair, FadingParams};
pub use specfun::LogDensity;

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
