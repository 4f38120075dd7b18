//! Correlated Rayleigh gain pair `(h0, h1)`.
//!
//! `h0 = h_r` is the direct link and `h1 = h_r + α h_b h_t` adds the tag's
//! reflected path, with `h_r, h_b, h_t` i.i.d. `CN(0, σ_h²)`.
//!
//! The angular integral in the joint density of `(μ, ν) = (|h0|², |h1|²)`
//! collapses by Graf's addition theorem,
//! `∫₀^π K₀(k|r₀ - r₁e^{iΔ}|) dΔ = π I₀(k r_<) K₀(k r_>)`, giving
//!
//! ```text
//! f(μ, ν) = 2 / (σ_h² s²) · e^{-μ/σ_h²} · I₀(2 min(√μ, √ν)/s) · K₀(2 max(√μ, √ν)/s),   s = |α| σ_h².
//! ```
//!
//! The angular-quadrature and double-integral forms are kept as independent routes.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{graded_breakpoints, integrate, integrate_with, QuadConfig};
use crate::roots::bisect;
use crate::specfun::{bessel_i_log_scaled, bessel_k0, bessel_k0_scaled};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// How a reflection loss in dB maps to `|α|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaConvention {
    /// `|α| = 10^(-dB/20)`: the loss applies to the reflected power `|α|²`.
    Amplitude,
    /// `|α| = 10^(-dB/10)`: the loss is read directly as the ratio `|α|`.
    Power,
}

/// Rayleigh statistics of the three links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub sigma_h2: f64,
    pub alpha_mag: f64,
}

impl FadingParams {
    pub fn new(sigma_h2: f64, alpha_mag: f64) -> Result<Self> {
        if !(sigma_h2 > 0.0) || !sigma_h2.is_finite() {
            return Err(invalid(format!("sigma_h2 must be positive, got {sigma_h2}")));
        }
        if !(alpha_mag > 0.0 && alpha_mag <= 1.0) {
            return Err(invalid(format!("alpha_mag must lie in (0, 1], got {alpha_mag}")));
        }
        Ok(FadingParams { sigma_h2, alpha_mag })
    }

    /// Reflection magnitude from a loss in dB.
    pub fn from_loss_db(sigma_h2: f64, loss_db: f64, convention: AlphaConvention) -> Result<Self> {
        let alpha = match convention {
            AlphaConvention::Amplitude => 10f64.powf(-loss_db / 20.0),
            AlphaConvention::Power => 10f64.powf(-loss_db / 10.0),
        };
        Self::new(sigma_h2, alpha)
    }

    /// Degenerate parameters with no reflected path, so `h1 = h0`.
    /// Only meaningful for sampling; the joint density does not exist.
    pub fn without_reflection(sigma_h2: f64) -> Result<Self> {
        let mut p = Self::new(sigma_h2, 1.0)?;
        p.alpha_mag = 0.0;
        Ok(p)
    }

    /// Scale `s = |α| σ_h²` of the reflected component `U = α h_b h_t`.
    pub fn reflected_scale(&self) -> f64 {
        self.alpha_mag * self.sigma_h2
    }

    fn require_density(&self) -> Result<()> {
        if self.alpha_mag > 0.0 {
            Ok(())
        } else {
            Err(invalid("joint density needs alpha_mag > 0"))
        }
    }
}

impl Default for FadingParams {
    /// `σ_h² = 1` with a 1.1 dB reflection loss in the amplitude convention.
    fn default() -> Self {
        Self::from_loss_db(1.0, 1.1, AlphaConvention::Amplitude).expect("valid defaults")
    }
}

/// One realization of the gain pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub h0: Complex64,
    pub h1: Complex64,
    pub mu: f64,
    pub nu: f64,
}

impl ChannelPair {
    pub fn new(h0: Complex64, h1: Complex64) -> Self {
        ChannelPair {
            h0,
            h1,
            mu: h0.norm_sqr(),
            nu: h1.norm_sqr(),
        }
    }

    /// A pair with real positive gains of the given magnitudes squared.
    pub fn from_gains(mu: f64, nu: f64) -> Result<Self> {
        if !(mu >= 0.0 && nu >= 0.0) {
            return Err(invalid(format!("gains must be nonnegative, got {mu}, {nu}")));
        }
        Ok(ChannelPair {
            h0: Complex64::new(mu.sqrt(), 0.0),
            h1: Complex64::new(nu.sqrt(), 0.0),
            mu,
            nu,
        })
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Draws `(h0, h1)` from three independent `CN(0, σ_h²)` links.
///
/// The phase of `α` is immaterial because `h_b h_t` is circularly symmetric.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, params: &FadingParams) -> ChannelPair {
    let hr = complex_gaussian(rng, params.sigma_h2);
    let hb = complex_gaussian(rng, params.sigma_h2);
    let ht = complex_gaussian(rng, params.sigma_h2);
    ChannelPair::new(hr, hr + params.alpha_mag * hb * ht)
}

fn check_gains(mu: f64, nu: f64) -> Result<()> {
    if !(mu > 0.0 && nu > 0.0) || !mu.is_finite() || !nu.is_finite() {
        return Err(Error::Domain(format!(
            "joint density is defined for mu, nu > 0, got ({mu}, {nu})"
        )));
    }
    Ok(())
}

/// Joint density of `(μ, ν)` in closed form.
pub fn joint_pdf_mu_nu(mu: f64, nu: f64, params: &FadingParams) -> Result<f64> {
    check_gains(mu, nu)?;
    params.require_density()?;
    let s = params.reflected_scale();
    let (lo, hi) = if mu <= nu { (mu, nu) } else { (nu, mu) };
    let a = 2.0 * lo.sqrt() / s;
    let b = 2.0 * hi.sqrt() / s;
    let ln_rest = -mu / params.sigma_h2 + bessel_i_log_scaled(0, a) + a - b;
    Ok(2.0 / (params.sigma_h2 * s * s) * ln_rest.exp() * bessel_k0_scaled(b)?)
}

/// Joint density of `(μ, ν)` through the single angular integral
/// `2 / (π σ_h² s²) e^{-μ/σ_h²} ∫₀^π K₀(2|h1 - h0|/s) dΔ`.
///
/// The integrand has a logarithmic peak at `Δ = 0` that becomes singular as
/// `ν → μ`; the mesh is graded geometrically towards zero down to the scale of
/// `|√μ - √ν|`.
pub fn joint_pdf_mu_nu_angular(mu: f64, nu: f64, params: &FadingParams, cfg: &QuadConfig) -> Result<f64> {
    check_gains(mu, nu)?;
    params.require_density()?;
    let s = params.reflected_scale();
    let gap = mu.sqrt() - nu.sqrt();
    let cross = 4.0 * (mu * nu).sqrt();
    let integrand = |d: f64| -> Result<f64> {
        let half = (0.5 * d).sin();
        let dist2 = gap * gap + cross * half * half;
        bessel_k0(2.0 * dist2.sqrt() / s)
    };
    let rel_gap = gap.abs() / (mu * nu).powf(0.25);
    let depth = if rel_gap > 0.0 {
        ((PI / rel_gap).log2().ceil() + 3.0).clamp(2.0, 50.0) as usize
    } else {
        50
    };
    let bps = graded_breakpoints(0.0, PI, 0.5, depth);
    let angular = integrate_with(integrand, &bps, cfg)?.value;
    Ok(2.0 / (PI * params.sigma_h2 * s * s) * (-mu / params.sigma_h2).exp() * angular)
}

/// Joint density of `(μ, ν)` by nested quadrature over both phases on
/// `[0, 2π]²`, in either integration order. Verification route only.
pub fn joint_pdf_mu_nu_double(
    mu: f64,
    nu: f64,
    params: &FadingParams,
    cfg: &QuadConfig,
    h1_phase_inner: bool,
) -> Result<f64> {
    check_gains(mu, nu)?;
    params.require_density()?;
    let s = params.reflected_scale();
    let (r0, r1) = (mu.sqrt(), nu.sqrt());
    let kernel = |th0: f64, th1: f64| -> Result<f64> {
        let dist2 = r0 * r0 + r1 * r1 - 2.0 * r0 * r1 * (th1 - th0).cos();
        bessel_k0(2.0 * dist2.max(0.0).sqrt() / s)
    };
    let two_pi = 2.0 * PI;
    // break the inner range where the two phases coincide
    let inner_bps = |outer: f64| -> Vec<f64> {
        if outer > 0.0 && outer < two_pi {
            vec![0.0, outer, two_pi]
        } else {
            vec![0.0, two_pi]
        }
    };
    let outer = |x: f64| -> Result<f64> {
        let inner = |y: f64| if h1_phase_inner { kernel(x, y) } else { kernel(y, x) };
        Ok(integrate_with(inner, &inner_bps(x), cfg)?.value)
    };
    let total = integrate_with(outer, &[0.0, PI, two_pi], cfg)?.value;
    let c = 1.0 / (PI * params.sigma_h2) * (-mu / params.sigma_h2).exp() / (2.0 * PI * s * s);
    Ok(c * total)
}

/// Point `V ≥ μ` with `P(ν > V | μ) ≤ eps`.
///
/// Uses the exact conditional tail `I₀(x₀) · x K₁(x)` with `x = 2√V / s`,
/// bounded above through `K₁(x) ≤ √(π/2x) e^{-x} (1 + 3/(8x))` for `x ≥ 1`.
pub fn nu_upper_bound(mu: f64, params: &FadingParams, eps: f64) -> Result<f64> {
    params.require_density()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("tail probability must be in (0, 1), got {eps}")));
    }
    let s = params.reflected_scale();
    let x0 = 2.0 * mu.max(0.0).sqrt() / s;
    let ln_i0 = bessel_i_log_scaled(0, x0) + x0;
    let ln_tail = |x: f64| ln_i0 + 0.5 * (0.5 * PI * x).ln() - x + (1.0 + 3.0 / (8.0 * x)).ln() - eps.ln();
    let start = x0.max(1.0);
    let x = if ln_tail(start) <= 0.0 {
        start
    } else {
        let mut hi = start + 1.0;
        while ln_tail(hi) > 0.0 {
            hi = start + 2.0 * (hi - start);
        }
        let root = bisect(|x| Ok(ln_tail(x)), start, hi, 1e-12)?;
        // step onto the safe side of the root
        let mut x = root;
        while ln_tail(x) > 0.0 {
            x += 1e-9 * x.max(1.0);
        }
        x
    };
    Ok((0.5 * x * s).powi(2).max(mu))
}

/// Upper end of the `μ` range carrying all but `eps` of the exponential marginal.
pub fn mu_upper_bound(params: &FadingParams, eps: f64) -> f64 {
    -params.sigma_h2 * eps.ln()
}

/// Marginal density of `ν`, by quadrature of the joint density over `μ`.
pub fn marginal_pdf_nu(nu: f64, params: &FadingParams, cfg: &QuadConfig) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("marginal density needs nu > 0, got {nu}")));
    }
    params.require_density()?;
    let mu_max = mu_upper_bound(params, 1e-17);
    let mut bps = vec![0.0];
    if nu < mu_max {
        bps.push(nu);
    }
    bps.push(mu_max.max(2.0 * nu));
    Ok(integrate_with(|mu| joint_pdf_mu_nu(mu, nu, params), &bps, cfg)?.value)
}

/// Marginal CDF of `ν` by nested quadrature.
pub fn marginal_cdf_nu(v: f64, params: &FadingParams, cfg: &QuadConfig) -> Result<f64> {
    if v <= 0.0 {
        return Ok(0.0);
    }
    let bps = graded_breakpoints(0.0, v, 0.25, 6);
    Ok(integrate_with(|nu| marginal_pdf_nu(nu, params, cfg), &bps, cfg)?.value)
}

/// Exponential marginal density of `μ`.
pub fn marginal_pdf_mu(mu: f64, params: &FadingParams) -> f64 {
    if mu < 0.0 {
        0.0
    } else {
        (-mu / params.sigma_h2).exp() / params.sigma_h2
    }
}

/// Integral of the joint density over `(0, ∞)²` after truncating each
/// coordinate where at most `eps` of mass lies beyond.
pub fn total_mass(params: &FadingParams, eps: f64, cfg: &QuadConfig) -> Result<f64> {
    let mu_max = mu_upper_bound(params, eps);
    let inner = |mu: f64| -> Result<f64> {
        let v = nu_upper_bound(mu, params, eps)?;
        Ok(integrate_with(|nu| joint_pdf_mu_nu(mu, nu, params), &[0.0, mu, v], cfg)?.value)
    };
    let bps = graded_breakpoints(0.0, mu_max, 0.5, 8);
    Ok(integrate_with(inner, &bps, cfg)?.value)
}

/// Probability that `(μ, ν)` falls in a rectangle.
pub fn box_probability(
    mu_range: (f64, f64),
    nu_range: (f64, f64),
    params: &FadingParams,
    cfg: &QuadConfig,
) -> Result<f64> {
    let inner = |mu: f64| -> Result<f64> {
        let (a, b) = nu_range;
        let mut bps = vec![a];
        if mu > a && mu < b {
            bps.push(mu);
        }
        bps.push(b);
        let f = |nu: f64| joint_pdf_mu_nu(mu, nu, params).unwrap_or(0.0);
        Ok(integrate(f, &bps, cfg)?.value)
    };
    let mut bps = vec![mu_range.0];
    for &edge in &[nu_range.0, nu_range.1] {
        if edge > mu_range.0 && edge < mu_range.1 {
            bps.push(edge);
        }
    }
    bps.push(mu_range.1);
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    bps.dedup();
    Ok(integrate_with(inner, &bps, cfg)?.value)
}
