//! Conditional laws of the averaged energy `Y = (1/N) Σ |y(n)|²`.
//!
//! Given gain `g` (μ under b = 0, ν under b = 1), `2N Y / σ²` is noncentral
//! chi-squared with `2N` degrees of freedom and noncentrality `2N g Ē / σ²`.

use crate::error::{invalid, Error, Result};
use crate::specfun::{noncentral_chi2_pdf_log, noncentral_chi2_pdf_log_series, tails_for_energy, LogDensity};
use std::f64::consts::PI;

/// Per-link constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Window length `N`.
    pub n_samples: u32,
    /// Average ambient energy per sample `Ē`.
    pub e_bar: f64,
    /// Noise variance `σ²`.
    pub sigma2: f64,
}

impl LinkParams {
    pub fn new(n_samples: u32, e_bar: f64, sigma2: f64) -> Result<Self> {
        if n_samples == 0 {
            return Err(invalid("window length N must be at least 1"));
        }
        if !(e_bar > 0.0) || !e_bar.is_finite() {
            return Err(invalid(format!("e_bar must be positive, got {e_bar}")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(LinkParams {
            n_samples,
            e_bar,
            sigma2,
        })
    }

    /// Link with the given `Ē` and `σ² = Ē / SNR`.
    pub fn from_snr_db(n_samples: u32, snr_db: f64, e_bar: f64) -> Result<Self> {
        Self::new(n_samples, e_bar, e_bar / crate::db_to_linear(snr_db))
    }

    pub fn snr(&self) -> f64 {
        self.e_bar / self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        crate::linear_to_db(self.snr())
    }

    /// Same SNR, energies multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.n_samples, c * self.e_bar, c * self.sigma2)
    }

    pub(crate) fn n(&self) -> f64 {
        self.n_samples as f64
    }

    /// Factor `2N/σ²` mapping `Y` to its chi-squared variable.
    pub(crate) fn chi_scale(&self) -> f64 {
        2.0 * self.n() / self.sigma2
    }
}

/// A nonnegative hypothesis gain (μ or ν).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HypothesisGain {
    pub gain: f64,
}

impl HypothesisGain {
    pub fn new(gain: f64) -> Result<Self> {
        check_gain(gain)?;
        Ok(HypothesisGain { gain })
    }
}

fn check_gain(g: f64) -> Result<()> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(invalid(format!("hypothesis gain must be finite and >= 0, got {g}")));
    }
    Ok(())
}

/// Mean and variance of `Y` given gain `g`.
pub fn cond_moments(g: f64, link: &LinkParams) -> (f64, f64) {
    let mean = link.sigma2 + g * link.e_bar;
    let var = (2.0 * g * link.e_bar * link.sigma2 + link.sigma2 * link.sigma2) / link.n();
    (mean, var)
}

/// `ln f_Y(t | g)`.
pub fn cond_log_pdf_y(t: f64, g: f64, link: &LinkParams) -> Result<LogDensity> {
    check_gain(g)?;
    if t <= 0.0 {
        return Ok(LogDensity::ZERO);
    }
    let c = link.chi_scale();
    let k = 2 * link.n_samples;
    let inner = noncentral_chi2_pdf_log(c * t, k, c * g * link.e_bar)?;
    Ok(LogDensity::new(c.ln() + inner.value))
}

/// `f_Y(t | g)`.
pub fn cond_pdf_y(t: f64, g: f64, link: &LinkParams) -> Result<f64> {
    Ok(cond_log_pdf_y(t, g, link)?.exp())
}

/// `f_Y(t | g)` through the Poisson-mixture series; independent of the Bessel route.
pub fn cond_pdf_y_series(t: f64, g: f64, link: &LinkParams) -> Result<f64> {
    check_gain(g)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let c = link.chi_scale();
    let inner = noncentral_chi2_pdf_log_series(c * t, 2 * link.n_samples, c * g * link.e_bar)?;
    Ok((c.ln() + inner.value).exp())
}

/// `P(Y ≤ t | g) = 1 - Q_N(√(2NgĒ/σ²), √(2Nt/σ²))`.
pub fn cond_cdf_y(t: f64, g: f64, link: &LinkParams) -> Result<f64> {
    check_gain(g)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(tails_for_energy(t, g, link).p())
}

/// `P(Y > t | g) = Q_N(√(2NgĒ/σ²), √(2Nt/σ²))`.
pub fn cond_sf_y(t: f64, g: f64, link: &LinkParams) -> Result<f64> {
    check_gain(g)?;
    if t <= 0.0 {
        return Ok(1.0);
    }
    Ok(tails_for_energy(t, g, link).q())
}

fn normal_pdf(t: f64, mean: f64, var: f64) -> f64 {
    (-(t - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Mean and variance of the first Gaussian approximation.
pub fn gauss1_moments(g: f64, link: &LinkParams) -> Result<(f64, f64)> {
    check_gain(g)?;
    if g == 0.0 {
        return Err(Error::ApproximationInvalid(
            "first Gaussian approximation has zero variance at g = 0".into(),
        ));
    }
    Ok((
        g * link.e_bar + link.sigma2,
        2.0 * g * link.e_bar * link.sigma2 / link.n(),
    ))
}

/// Mean and variance of the second Gaussian approximation.
pub fn gauss2_moments(g: f64, link: &LinkParams) -> Result<(f64, f64)> {
    check_gain(g)?;
    Ok(cond_moments(g, link))
}

/// First Gaussian approximation: the noise-only energy is frozen at its mean.
pub fn cond_pdf_y_gauss1(t: f64, g: f64, link: &LinkParams) -> Result<f64> {
    let (m, v) = gauss1_moments(g, link)?;
    Ok(normal_pdf(t, m, v))
}

/// Second Gaussian approximation: moment matched to the exact law.
pub fn cond_pdf_y_gauss2(t: f64, g: f64, link: &LinkParams) -> Result<f64> {
    let (m, v) = gauss2_moments(g, link)?;
    Ok(normal_pdf(t, m, v))
}

/// Sorted breakpoints on `[0, t_max]` that resolve the bulk of `Y` under
/// each of `gains`, for quadrature over `t`.
pub fn y_breakpoints(gains: &[f64], link: &LinkParams) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut t_max: f64 = 0.0;
    for &g in gains {
        let (m, v) = cond_moments(g, link);
        let sd = v.sqrt();
        for k in [-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0] {
            let t = m + k * sd;
            if t > 0.0 {
                pts.push(t);
            }
        }
        t_max = t_max.max(m + 60.0 * sd + 20.0 * link.sigma2);
    }
    pts.push(t_max);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    pts
}
