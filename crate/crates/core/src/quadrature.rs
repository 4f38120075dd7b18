//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};
use rayon::prelude::*;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the 7-point rule, attached to `XGK[1]`, `XGK[3]`, `XGK[5]`, `XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Evaluate the nodes of each panel on the rayon pool.
    pub parallel: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 4000,
            parallel: false,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        QuadConfig {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Nodes of the 15-point rule on `[a, b]`, in a fixed order.
fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; 15];
    for j in 0..7 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

fn rule(a: f64, b: f64, fx: &[f64; 15]) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let fc = fx[14];
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = kron.abs();
    for j in 0..7 {
        let pair = fx[2 * j] + fx[2 * j + 1];
        kron += WGK[j] * pair;
        resabs += WGK[j] * (fx[2 * j].abs() + fx[2 * j + 1].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * kron;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fx[2 * j] - mean).abs() + (fx[2 * j + 1] - mean).abs());
    }
    let value = kron * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

fn eval_panels<F>(f: &F, bounds: &[(f64, f64)], parallel: bool) -> Result<Vec<Panel>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let xs: Vec<f64> = bounds.iter().flat_map(|&(a, b)| nodes(a, b)).collect();
    let fx: Vec<f64> = if parallel {
        xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?
    } else {
        xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?
    };
    Ok(bounds
        .iter()
        .zip(fx.chunks_exact(15))
        .map(|(&(a, b), chunk)| {
            let arr: [f64; 15] = chunk.try_into().expect("chunk of 15");
            let (value, error) = rule(a, b, &arr);
            Panel { a, b, value, error }
        })
        .collect())
}

/// Integrates a fallible `f` over the consecutive intervals defined by
/// `breakpoints` (at least two increasing points). The integrand is never
/// evaluated at a breakpoint.
pub fn integrate_with<F>(f: F, breakpoints: &[f64], cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(format!(
            "quadrature breakpoints must be strictly increasing, got {breakpoints:?}"
        )));
    }
    let initial: Vec<(f64, f64)> = breakpoints.windows(2).map(|w| (w[0], w[1])).collect();
    let mut panels = eval_panels(&f, &initial, cfg.parallel)?;
    let mut evaluations = 15 * panels.len();
    // Panels too narrow to split still count towards the error.
    let mut frozen: Vec<Panel> = Vec::new();
    loop {
        let value: f64 = panels.iter().chain(&frozen).map(|p| p.value).sum();
        let error: f64 = panels.iter().chain(&frozen).map(|p| p.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if panels.is_empty() || panels.len() + frozen.len() >= cfg.max_panels {
            return Err(Error::Quadrature {
                estimate: value,
                error,
                evaluations,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if p.error > panels[best].error { i } else { best });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(p.a < mid && mid < p.b) || (p.b - p.a) <= 1e-14 * p.a.abs().max(p.b.abs()) {
            frozen.push(p);
            continue;
        }
        let halves = eval_panels(&f, &[(p.a, mid), (mid, p.b)], cfg.parallel)?;
        evaluations += 30;
        panels.extend(halves);
    }
}

/// Infallible-integrand convenience wrapper around [`integrate_with`].
pub fn integrate<F>(f: F, breakpoints: &[f64], cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_with(|x| Ok(f(x)), breakpoints, cfg)
}

/// Breakpoints `a, a + (b-a)·r^{depth}, …, a + (b-a)·r, b` graded geometrically towards `a`.
pub fn graded_breakpoints(a: f64, b: f64, ratio: f64, depth: usize) -> Vec<f64> {
    let mut pts = vec![a];
    for k in (1..=depth).rev() {
        pts.push(a + (b - a) * ratio.powi(k as i32));
    }
    pts.push(b);
    pts
}
