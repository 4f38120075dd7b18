//! Decision thresholds on the energy statistic `Y`.
//!
//! The receiver decides for the hypothesis with the larger gain when `Y`
//! exceeds the threshold.

use crate::energy_stats::{cond_log_pdf_y, LinkParams};
use crate::error::{invalid, Error, Result};
use crate::roots::bisect;
use std::fmt;
use std::str::FromStr;

/// Default bound on the log-likelihood residual at the exact ML threshold.
pub const DEFAULT_MLT_TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 40;

/// Threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectionStrategy {
    /// Midpoint of the two conditional means.
    Mt,
    /// Exact maximum-likelihood threshold (crossing of the exact densities).
    Mlt,
    /// Crossing of the first Gaussian approximations.
    MltApp1,
    /// Crossing of the second Gaussian approximations.
    MltApp2,
}

impl DetectionStrategy {
    pub const ALL: [DetectionStrategy; 4] = [
        DetectionStrategy::Mt,
        DetectionStrategy::Mlt,
        DetectionStrategy::MltApp1,
        DetectionStrategy::MltApp2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DetectionStrategy::Mt => "mt",
            DetectionStrategy::Mlt => "mlt",
            DetectionStrategy::MltApp1 => "mlt_app1",
            DetectionStrategy::MltApp2 => "mlt_app2",
        }
    }
}

impl fmt::Display for DetectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "mt" => Ok(DetectionStrategy::Mt),
            "mlt" => Ok(DetectionStrategy::Mlt),
            "mlt_app1" | "app1" => Ok(DetectionStrategy::MltApp1),
            "mlt_app2" | "app2" => Ok(DetectionStrategy::MltApp2),
            other => Err(invalid(format!("unknown detection strategy '{other}'"))),
        }
    }
}

/// A threshold value with the rule that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub strategy: DetectionStrategy,
}

fn check_gains(mu: f64, nu: f64) -> Result<()> {
    if !(mu >= 0.0 && nu >= 0.0) || !mu.is_finite() || !nu.is_finite() {
        return Err(invalid(format!("gains must be finite and >= 0, got ({mu}, {nu})")));
    }
    Ok(())
}

fn check_distinct(mu: f64, nu: f64) -> Result<()> {
    check_gains(mu, nu)?;
    if mu == nu {
        return Err(Error::NoUniqueThreshold(mu));
    }
    Ok(())
}

/// `ln(b/a) / (b - a)` for positive `a ≠ b`, without cancellation when `b ≈ a`.
fn log_ratio_slope(a: f64, b: f64) -> f64 {
    ((b - a) / a).ln_1p() / (b - a)
}

/// `σ² + Ē(μ + ν)/2`.
pub fn threshold_mt(mu: f64, nu: f64, link: &LinkParams) -> Result<Threshold> {
    check_gains(mu, nu)?;
    Ok(Threshold {
        value: link.sigma2 + 0.5 * link.e_bar * (mu + nu),
        strategy: DetectionStrategy::Mt,
    })
}

/// Crossing of the two first-approximation Gaussian densities.
pub fn threshold_mlt_app1(mu: f64, nu: f64, link: &LinkParams) -> Result<Threshold> {
    check_distinct(mu, nu)?;
    if mu == 0.0 || nu == 0.0 {
        return Err(Error::ApproximationInvalid(
            "first Gaussian approximation is degenerate at zero gain".into(),
        ));
    }
    let (e, s2, n) = (link.e_bar, link.sigma2, link.n_samples as f64);
    let radicand = mu * nu * e * (2.0 * s2 * log_ratio_slope(mu, nu) / n + e);
    if !(radicand >= 0.0) {
        return Err(Error::ApproximationInvalid(format!("negative radicand {radicand:e}")));
    }
    Ok(Threshold {
        value: s2 + radicand.sqrt(),
        strategy: DetectionStrategy::MltApp1,
    })
}

/// Crossing of the two second-approximation Gaussian densities.
pub fn threshold_mlt_app2(mu: f64, nu: f64, link: &LinkParams) -> Result<Threshold> {
    check_distinct(mu, nu)?;
    let (e, s2, n) = (link.e_bar, link.sigma2, link.n_samples as f64);
    let a_mu = 2.0 * mu * e + s2;
    let a_nu = 2.0 * nu * e + s2;
    // ln(a_nu / a_mu) / (nu - mu) = 2Ē · ln(a_nu/a_mu)/(a_nu - a_mu)
    let slope = 2.0 * e * log_ratio_slope(a_mu, a_nu);
    let radicand =
        0.25 * s2 * s2 + mu * nu * e * e + 0.5 * (mu + nu) * e * s2 + a_mu * a_nu * s2 * slope / (2.0 * n * e);
    if !(radicand >= 0.0) {
        return Err(Error::ApproximationInvalid(format!("negative radicand {radicand:e}")));
    }
    Ok(Threshold {
        value: 0.5 * s2 + radicand.sqrt(),
        strategy: DetectionStrategy::MltApp2,
    })
}

/// `ln f_Y(t | ν) - ln f_Y(t | μ)`.
pub fn log_likelihood_ratio(t: f64, mu: f64, nu: f64, link: &LinkParams) -> Result<f64> {
    Ok(cond_log_pdf_y(t, nu, link)?.value - cond_log_pdf_y(t, mu, link)?.value)
}

/// Exact ML threshold: the unique crossing of the two exact conditional densities.
///
/// Bisection on the log-likelihood difference, starting from the bracket
/// spanned by the two conditional means and widening it by factors of two.
pub fn threshold_mlt(mu: f64, nu: f64, link: &LinkParams, tol: f64) -> Result<Threshold> {
    check_distinct(mu, nu)?;
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (lo_g, hi_g) = if mu < nu { (mu, nu) } else { (nu, mu) };
    // increasing in t: the larger gain wins at large energies
    let diff = |t: f64| -> Result<f64> { log_likelihood_ratio(t, lo_g, hi_g, link) };
    let mut a = link.sigma2 + lo_g * link.e_bar;
    let mut b = link.sigma2 + hi_g * link.e_bar;
    let mut expansions = 0;
    while diff(a)? >= 0.0 {
        if expansions == MAX_EXPANSIONS {
            return Err(Error::Convergence(format!(
                "no lower bracket for MLT (mu={mu}, nu={nu}, N={}, snr={}): D({a:e}) >= 0",
                link.n_samples,
                link.snr()
            )));
        }
        b = b.min(a);
        a *= 0.5;
        expansions += 1;
    }
    while diff(b)? <= 0.0 {
        if expansions == MAX_EXPANSIONS {
            return Err(Error::Convergence(format!(
                "no upper bracket for MLT (mu={mu}, nu={nu}, N={}, snr={}): D({b:e}) <= 0",
                link.n_samples,
                link.snr()
            )));
        }
        a = a.max(b);
        b *= 2.0;
        expansions += 1;
    }
    let value = bisect(diff, a, b, tol)?;
    Ok(Threshold {
        value,
        strategy: DetectionStrategy::Mlt,
    })
}

/// Threshold for any strategy; MLT uses [`DEFAULT_MLT_TOL`].
///
/// Equal gains are accepted only by MT, which then returns the common mean.
pub fn threshold(strategy: DetectionStrategy, mu: f64, nu: f64, link: &LinkParams) -> Result<Threshold> {
    match strategy {
        DetectionStrategy::Mt => threshold_mt(mu, nu, link),
        DetectionStrategy::Mlt => threshold_mlt(mu, nu, link, DEFAULT_MLT_TOL),
        DetectionStrategy::MltApp1 => threshold_mlt_app1(mu, nu, link),
        DetectionStrategy::MltApp2 => threshold_mlt_app2(mu, nu, link),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n150_0db() -> LinkParams {
        LinkParams::new(150, 1.0, 1.0).unwrap()
    }

    #[test]
    fn mt_example() {
        let t = threshold_mt(1.0, 1.625, &LinkParams::new(20, 1.0, 1.0).unwrap()).unwrap();
        assert!((t.value - 2.3125).abs() < 1e-15);
    }

    #[test]
    fn app1_example() {
        let t = threshold_mlt_app1(1.0, 1.625, &n150_0db()).unwrap();
        let expected = 1.0 + (1.625 * (2.0 / (150.0 * 0.625) * 1.625f64.ln() + 1.0)).sqrt();
        assert!((t.value - expected).abs() < 1e-14);
    }

    #[test]
    fn ties_are_rejected_except_mt() {
        let l = n150_0db();
        for s in [
            DetectionStrategy::Mlt,
            DetectionStrategy::MltApp1,
            DetectionStrategy::MltApp2,
        ] {
            assert!(matches!(threshold(s, 1.0, 1.0, &l), Err(Error::NoUniqueThreshold(_))));
        }
        assert!((threshold(DetectionStrategy::Mt, 1.3, 1.3, &l).unwrap().value - 2.3).abs() < 1e-15);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in DetectionStrategy::ALL {
            assert_eq!(s.name().parse::<DetectionStrategy>().unwrap(), s);
        }
        assert!("bogus".parse::<DetectionStrategy>().is_err());
    }

    #[test]
    fn log_ratio_slope_near_tie() {
        let a = 1.0;
        let b = 1.0 + 1e-12;
        assert!((log_ratio_slope(a, b) - 1.0).abs() < 1e-11);
    }
}
