//! Conditional and fading-averaged bit error rates.

use crate::detection::{threshold, DetectionStrategy, Threshold};
use crate::energy_stats::LinkParams;
use crate::error::{invalid, Error, Result};
use crate::fading::{joint_pdf_mu_nu, mu_upper_bound, nu_upper_bound, FadingParams};
use crate::quadrature::{graded_breakpoints, integrate_with, QuadConfig};
use crate::specfun::tails_for_energy;
use std::fmt;
use std::str::FromStr;

/// Receiver architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    /// Knows `(μ, ν)` and detects each bit on its own.
    R1Csi,
    /// No channel knowledge; differential encoding over pairs of symbols.
    R2NoCsi,
}

impl ReceiverKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::R1Csi => "r1",
            ReceiverKind::R2NoCsi => "r2",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r1" | "r1_csi" | "csi" => Ok(ReceiverKind::R1Csi),
            "r2" | "r2_nocsi" | "nocsi" => Ok(ReceiverKind::R2NoCsi),
            other => Err(invalid(format!("unknown receiver '{other}'"))),
        }
    }
}

/// How a BER value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BerMethod {
    Analytic,
    SemiAnalytic,
    MonteCarlo,
}

/// A BER value with its provenance and uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub value: f64,
    pub method: BerMethod,
    /// Half-width of the 95% interval; 0 for analytic values.
    pub ci_halfwidth: f64,
    /// Standard error for stochastic methods; estimated quadrature error bound otherwise.
    pub std_error: f64,
    /// Number of channels or bits behind a stochastic estimate.
    pub samples: u64,
}

fn check_inputs(mu: f64, nu: f64, t: f64) -> Result<()> {
    if !(mu >= 0.0 && nu >= 0.0) || !mu.is_finite() || !nu.is_finite() {
        return Err(invalid(format!("gains must be finite and >= 0, got ({mu}, {nu})")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("threshold must be positive, got {t}")));
    }
    Ok(())
}

/// Error probability of a single bit detected with threshold `t` when the
/// receiver knows which hypothesis has the larger gain.
///
/// For `ν ≥ μ` this is `½ [Q_N(a_μ, b) + 1 - Q_N(a_ν, b)]`, otherwise
/// `½ [1 - Q_N(a_μ, b) + Q_N(a_ν, b)]`, with `a_g = √(2NgĒ/σ²)` and
/// `b = √(2Nt/σ²)`. Every tail is evaluated directly so small values keep
/// their relative accuracy.
pub fn cond_ber_r1(mu: f64, nu: f64, t: f64, link: &LinkParams) -> Result<f64> {
    check_inputs(mu, nu, t)?;
    let h0 = tails_for_energy(t, mu, link);
    let h1 = tails_for_energy(t, nu, link);
    let p = if nu >= mu {
        0.5 * (h0.q() + h1.p())
    } else {
        0.5 * (h0.p() + h1.q())
    };
    Ok(p.min(0.5))
}

/// Message-bit error probability after differential decoding: `2p(1 - p)`
/// with `p` the single-bit error probability.
pub fn cond_ber_r2(mu: f64, nu: f64, t: f64, link: &LinkParams) -> Result<f64> {
    let p = cond_ber_r1(mu, nu, t, link)?;
    Ok(2.0 * p * (1.0 - p))
}

/// Conditional BER for a receiver at threshold `t`.
pub fn cond_ber(receiver: ReceiverKind, mu: f64, nu: f64, t: &Threshold, link: &LinkParams) -> Result<f64> {
    match receiver {
        ReceiverKind::R1Csi => cond_ber_r1(mu, nu, t.value, link),
        ReceiverKind::R2NoCsi => cond_ber_r2(mu, nu, t.value, link),
    }
}

/// Conditional BER with the threshold chosen by `strategy`.
///
/// Equal gains give ½ for every threshold, so ties return ½ without asking
/// the strategy for a threshold.
pub fn cond_ber_for_strategy(
    receiver: ReceiverKind,
    strategy: DetectionStrategy,
    mu: f64,
    nu: f64,
    link: &LinkParams,
) -> Result<f64> {
    if mu == nu {
        return Ok(0.5);
    }
    let t = threshold(strategy, mu, nu, link)?;
    cond_ber(receiver, mu, nu, &t, link)
}

/// Settings for [`avg_ber`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgBerConfig {
    /// Absolute tolerance of the outer integral.
    pub abs_tol: f64,
    /// Relative tolerance of the outer integral.
    pub rel_tol: f64,
    /// Probability mass dropped by truncating each of `μ` and `ν`.
    pub truncation: f64,
    pub max_panels: usize,
    /// Evaluate outer nodes on the rayon pool.
    pub parallel: bool,
}

impl Default for AvgBerConfig {
    fn default() -> Self {
        AvgBerConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-6,
            truncation: 1e-9,
            max_panels: 2000,
            parallel: true,
        }
    }
}

/// Breakpoints on `[0, μ] ∪ [μ, ν_max]` graded towards the diagonal `ν = μ`,
/// where the conditional BER has a narrow peak and the density a kink, and
/// spaced geometrically away from it so no panel spans many scales of `ν`.
fn inner_breakpoints(mu: f64, nu_max: f64, link: &LinkParams) -> Vec<f64> {
    let width = 1.0 / (link.n_samples as f64 * link.snr().max(1.0)).sqrt();
    let depth = (((10.0 / width).log2() / 2.0).ceil() as i32).clamp(1, 20);
    let mut pts = vec![0.0];
    for j in (1..=6).rev() {
        pts.push(mu * 0.25f64.powi(j));
    }
    for k in 1..=depth {
        pts.push(mu * (1.0 - 0.25f64.powi(k)));
    }
    pts.push(mu);
    for k in (1..=depth).rev() {
        pts.push(mu * (1.0 + 0.25f64.powi(k)));
    }
    let mut x = 2.0 * mu;
    while x < nu_max {
        pts.push(x);
        x *= 2.0;
    }
    pts.retain(|&x| x.is_finite() && x < nu_max);
    if nu_max > mu {
        pts.push(nu_max);
    }
    pts.dedup();
    pts
}

/// Average BER over the joint fading law by nested adaptive quadrature.
///
/// The outer integral runs over `μ ∈ (0, -σ_h² ln ε]`; for each `μ` the inner
/// one runs over `ν ∈ (0, ν_max(μ)]` with `P(ν > ν_max | μ) ≤ ε`, split at the
/// diagonal `ν = μ`. No node lies on the diagonal. The reported `std_error`
/// bounds quadrature plus truncation error.
pub fn avg_ber(
    receiver: ReceiverKind,
    strategy: DetectionStrategy,
    link: &LinkParams,
    fading: &FadingParams,
    cfg: &AvgBerConfig,
) -> Result<BerEstimate> {
    if !(cfg.abs_tol > 0.0 && cfg.rel_tol >= 0.0 && cfg.truncation > 0.0 && cfg.truncation < 0.1) {
        return Err(invalid("average-BER tolerances must be positive"));
    }
    let mu_max = mu_upper_bound(fading, cfg.truncation);
    let inner_cfg = QuadConfig {
        abs_tol: 0.1 * cfg.abs_tol / mu_max,
        rel_tol: 0.1 * cfg.rel_tol,
        max_panels: cfg.max_panels,
        parallel: false,
    };
    let inner = |mu: f64| -> Result<f64> {
        let nu_max = nu_upper_bound(mu, fading, cfg.truncation)?;
        let bps = inner_breakpoints(mu, nu_max, link);
        let f = |nu: f64| -> Result<f64> {
            let density = joint_pdf_mu_nu(mu, nu, fading)?;
            if density == 0.0 {
                return Ok(0.0);
            }
            Ok(density * cond_ber_for_strategy(receiver, strategy, mu, nu, link)?)
        };
        Ok(integrate_with(f, &bps, &inner_cfg)?.value)
    };
    let outer_cfg = QuadConfig {
        abs_tol: cfg.abs_tol,
        rel_tol: cfg.rel_tol,
        max_panels: cfg.max_panels,
        parallel: cfg.parallel,
    };
    let outer_bps = graded_breakpoints(0.0, mu_max, 0.25, 10);
    let res = integrate_with(inner, &outer_bps, &outer_cfg)?;
    let value = res.value.clamp(0.0, 1.0);
    let bound = res.error + 0.1 * (cfg.abs_tol + cfg.rel_tol * value) + 2.0 * cfg.truncation;
    Ok(BerEstimate {
        value,
        method: BerMethod::Analytic,
        ci_halfwidth: 0.0,
        std_error: bound,
        samples: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_gives_one_half() {
        let l = LinkParams::new(20, 1.0, 1.0).unwrap();
        let p = cond_ber_r1(1.2, 1.2, 2.0, &l).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((cond_ber_r2(1.2, 1.2, 2.0, &l).unwrap() - 0.5).abs() < 1e-15);
        let p = cond_ber_for_strategy(ReceiverKind::R1Csi, DetectionStrategy::Mlt, 0.7, 0.7, &l);
        assert_eq!(p.unwrap(), 0.5);
    }

    #[test]
    fn r2_is_two_p_one_minus_p() {
        let l = LinkParams::new(150, 1.0, 1.0).unwrap();
        let p = cond_ber_r1(1.0, 1.625, 2.3125, &l).unwrap();
        let r2 = cond_ber_r2(1.0, 1.625, 2.3125, &l).unwrap();
        assert!((r2 - 2.0 * p * (1.0 - p)).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_threshold() {
        let l = LinkParams::new(5, 1.0, 1.0).unwrap();
        assert!(cond_ber_r1(1.0, 2.0, 0.0, &l).is_err());
        assert!(cond_ber_r1(-1.0, 2.0, 1.0, &l).is_err());
    }

    #[test]
    fn inner_breakpoints_are_increasing_and_straddle_the_diagonal() {
        let l = LinkParams::from_snr_db(150, 10.0, 1.0).unwrap();
        let b = inner_breakpoints(2.0, 30.0, &l);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(b.contains(&2.0));
        assert_eq!(*b.last().unwrap(), 30.0);
    }
}
