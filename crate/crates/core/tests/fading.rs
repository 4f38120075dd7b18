use amber_core::fading::*;
use amber_core::quadrature::{integrate, integrate_with, QuadConfig};
use amber_core::simkit::{sample_channels, StreamPurpose, Streams};
use amber_core::stats::{ks_pvalue, ks_statistic_sorted_upper, ks_two_sample};
use proptest::prelude::*;

fn params() -> FadingParams {
    FadingParams::default()
}

#[test]
fn no_reflection_collapses_the_hypotheses() {
    let p = FadingParams::without_reflection(1.0).unwrap();
    let mut rng = Streams::new(3).stream(0, StreamPurpose::Channel);
    for _ in 0..1000 {
        let c = sample_channel(&mut rng, &p);
        assert_eq!(c.h0, c.h1);
        assert_eq!(c.mu, c.nu);
    }
    assert!(joint_pdf_mu_nu(1.0, 1.0, &p).is_err());
}

#[test]
fn gains_are_squared_magnitudes() {
    for c in sample_channels(&params(), 1000, 8) {
        assert_eq!(c.mu, c.h0.norm_sqr());
        assert_eq!(c.nu, c.h1.norm_sqr());
    }
}

#[test]
fn sampled_means() {
    let p = params();
    let draws = sample_channels(&p, 1_000_000, 11);
    let n = draws.len() as f64;
    let m_mu = draws.iter().map(|c| c.mu).sum::<f64>() / n;
    let m_nu = draws.iter().map(|c| c.nu).sum::<f64>() / n;
    let expect_nu = 1.0 + p.alpha_mag * p.alpha_mag;
    assert!((m_mu - 1.0).abs() < 0.01, "E[mu] = {m_mu}");
    assert!((m_nu - expect_nu).abs() < 0.02, "E[nu] = {m_nu}, expected {expect_nu}");
    assert!((expect_nu - 1.776).abs() < 1e-3);
}

#[test]
fn single_integral_matches_double_integral() {
    let p = params();
    let cfg = QuadConfig::with_tol(1e-13, 1e-10);
    let grid = [
        (0.1, 0.5),
        (0.5, 0.1),
        (1.0, 1.625),
        (1.0, 0.625),
        (2.0, 2.2),
        (0.3, 3.0),
        (3.0, 0.3),
        (0.05, 0.06),
        (5.0, 4.0),
        (1.5, 6.0),
    ];
    for &(mu, nu) in &grid {
        let closed = joint_pdf_mu_nu(mu, nu, &p).unwrap();
        let single = joint_pdf_mu_nu_angular(mu, nu, &p, &cfg).unwrap();
        let double = joint_pdf_mu_nu_double(mu, nu, &p, &cfg, true).unwrap();
        assert!(
            (single - double).abs() < 1e-6 * double,
            "({mu},{nu}): {single} vs {double}"
        );
        assert!(
            (closed - double).abs() < 1e-6 * double,
            "({mu},{nu}): {closed} vs {double}"
        );
    }
}

#[test]
fn double_integral_is_order_independent() {
    let p = params();
    let cfg = QuadConfig::with_tol(1e-13, 1e-10);
    for &(mu, nu) in &[(1.0, 1.625), (0.4, 2.5)] {
        let a = joint_pdf_mu_nu_double(mu, nu, &p, &cfg, true).unwrap();
        let b = joint_pdf_mu_nu_double(mu, nu, &p, &cfg, false).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }
}

#[test]
fn integrating_out_nu_leaves_the_exponential() {
    for p in [params(), FadingParams::new(2.0, 0.5).unwrap()] {
        let cfg = QuadConfig::with_tol(1e-14, 1e-11);
        for mu in [0.01, 0.7, 3.0] {
            let v = nu_upper_bound(mu, &p, 1e-14).unwrap();
            let m = integrate(|nu| joint_pdf_mu_nu(mu, nu, &p).unwrap(), &[0.0, mu, 2.0 * mu, v], &cfg)
                .unwrap()
                .value;
            let expect = marginal_pdf_mu(mu, &p);
            assert!((m - expect).abs() < 1e-8 * expect, "mu={mu}: {m} vs {expect}");
        }
    }
}

#[test]
fn joint_density_has_unit_mass() {
    let mass = total_mass(&params(), 1e-10, &QuadConfig::with_tol(1e-11, 1e-9)).unwrap();
    assert!((mass - 1.0).abs() < 1e-4, "mass {mass}");
}

#[test]
fn nu_marginal_normalises_and_is_finite_at_zero() {
    let p = params();
    let cfg = QuadConfig::with_tol(1e-10, 1e-8);
    let total = marginal_cdf_nu(60.0, &p, &cfg).unwrap();
    assert!((total - 1.0).abs() < 1e-3, "{total}");
    let near0 = marginal_pdf_nu(1e-12, &p, &cfg).unwrap();
    let small = marginal_pdf_nu(1e-6, &p, &cfg).unwrap();
    assert!(near0.is_finite() && near0 > 0.0);
    assert!((near0 - small).abs() < 1e-3 * near0, "{near0} vs {small}");
}

#[test]
fn sampled_nu_matches_marginal_cdf() {
    let p = params();
    let mut nu: Vec<f64> = sample_channels(&p, 1_000_000, 21).iter().map(|c| c.nu).collect();
    nu.sort_by(f64::total_cmp);
    let cfg = QuadConfig::with_tol(1e-10, 1e-8);
    let d = ks_statistic_sorted_upper(&nu, |v| marginal_cdf_nu(v, &p, &cfg).unwrap(), 1000);
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn reflected_part_is_independent_of_the_direct_gain() {
    let draws = sample_channels(&params(), 200_000, 5);
    let mut mus: Vec<f64> = draws.iter().map(|c| c.mu).collect();
    mus.sort_by(f64::total_cmp);
    let median = mus[mus.len() / 2];
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for c in &draws {
        let u = (c.h1 - c.h0).norm_sqr();
        if c.mu < median {
            lo.push(u);
        } else {
            hi.push(u);
        }
    }
    lo.sort_by(f64::total_cmp);
    hi.sort_by(f64::total_cmp);
    let d = ks_two_sample(&lo, &hi);
    let n_eff = lo.len() as f64 * hi.len() as f64 / (lo.len() + hi.len()) as f64;
    let pv = ks_pvalue(d, n_eff);
    assert!(pv > 0.01, "KS {d}, p {pv}");
}

#[test]
fn power_convention_gives_a_smaller_reflection() {
    let a = FadingParams::from_loss_db(1.0, 1.1, AlphaConvention::Amplitude).unwrap();
    let b = FadingParams::from_loss_db(1.0, 1.1, AlphaConvention::Power).unwrap();
    assert!(b.alpha_mag < a.alpha_mag);
    assert!((a.alpha_mag * a.alpha_mag - b.alpha_mag).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_agrees_with_angular_integral(mu in 0.01f64..8.0, nu in 0.01f64..8.0) {
        let p = params();
        let a = joint_pdf_mu_nu(mu, nu, &p).unwrap();
        let b = joint_pdf_mu_nu_angular(mu, nu, &p, &QuadConfig::with_tol(1e-16, 1e-11)).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a, "{} vs {}", a, b);
    }

    #[test]
    fn density_is_positive_and_finite(mu in 1e-8f64..40.0, nu in 1e-8f64..60.0, s in 0.2f64..3.0, alpha in 0.05f64..1.0) {
        let p = FadingParams::new(s, alpha).unwrap();
        let f = joint_pdf_mu_nu(mu, nu, &p).unwrap();
        prop_assert!(f.is_finite() && f >= 0.0);
    }

    #[test]
    fn nu_bound_is_beyond_mu(mu in 0.0f64..30.0, e in 1e-14f64..1e-2) {
        let v = nu_upper_bound(mu, &params(), e).unwrap();
        prop_assert!(v >= mu && v.is_finite());
    }

    #[test]
    fn box_probabilities_are_additive(split in 0.2f64..2.0) {
        let p = params();
        let cfg = QuadConfig::with_tol(1e-12, 1e-10);
        let whole = box_probability((0.0, 2.5), (0.0, 3.0), &p, &cfg).unwrap();
        let left = box_probability((0.0, split), (0.0, 3.0), &p, &cfg).unwrap();
        let right = box_probability((split, 2.5), (0.0, 3.0), &p, &cfg).unwrap();
        prop_assert!((whole - left - right).abs() < 1e-8);
    }
}

#[test]
fn marginal_nu_density_integrates_the_joint_density() {
    let p = params();
    let cfg = QuadConfig::with_tol(1e-12, 1e-10);
    let v = 1.3;
    let direct = marginal_pdf_nu(v, &p, &cfg).unwrap();
    let again = integrate_with(|mu| joint_pdf_mu_nu(mu, v, &p), &[0.0, 0.5 * v, v, 3.0 * v, 40.0], &cfg)
        .unwrap()
        .value;
    assert!((direct - again).abs() < 1e-9 * direct);
}
