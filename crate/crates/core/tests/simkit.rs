use amber_core::ber::{avg_ber, cond_ber_for_strategy, cond_ber_r1, AvgBerConfig, BerMethod, ReceiverKind};
use amber_core::detection::DetectionStrategy;
use amber_core::energy_stats::cond_cdf_y;
use amber_core::simkit::*;
use amber_core::stats::{ks_pvalue, ks_statistic_sorted, two_proportion_pvalue, RunningStats};
use amber_core::{ChannelPair, FadingParams, LinkParams};

fn link(n: u32, snr_db: f64) -> LinkParams {
    LinkParams::from_snr_db(n, snr_db, 1.0).unwrap()
}

fn fixed(mu: f64, nu: f64) -> ChannelMode {
    ChannelMode::Fixed(ChannelPair::from_gains(mu, nu).unwrap())
}

#[test]
fn window_mean_matches_the_moment_identity() {
    let l = link(20, 0.0);
    let ch = ChannelPair::from_gains(1.0, 1.625).unwrap();
    let ys = simulate_y_many(true, &ch, &l, AmbientModel::ConstantEnvelope, 1_000_000, 4);
    let mut s = RunningStats::default();
    ys.iter().for_each(|&y| s.push(y));
    assert!(
        (s.mean() - 2.625).abs() < 3.0 * s.std_error(),
        "{} ± {}",
        s.mean(),
        s.std_error()
    );
}

#[test]
fn simulated_windows_follow_the_exact_law() {
    let l = link(20, 0.0);
    for (b, g) in [(false, 1.0), (true, 0.625)] {
        for ambient in [AmbientModel::ConstantEnvelope, AmbientModel::ComplexGaussianNormalized] {
            let ch = ChannelPair::from_gains(1.0, 0.625).unwrap();
            let mut ys = simulate_y_many(b, &ch, &l, ambient, 100_000, 12);
            ys.sort_by(f64::total_cmp);
            let d = ks_statistic_sorted(&ys, |t| cond_cdf_y(t, g, &l).unwrap());
            assert!(ks_pvalue(d, ys.len() as f64) > 0.01, "{ambient}: KS {d}");
        }
    }
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let l = link(20, 5.0);
    let mut plan = TrialPlan::new(20_000, 77, ChannelMode::BlockFading(FadingParams::default()));
    plan.coherence_bits = 8;
    plan.batch_blocks = 64;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    run_receiver_r1(&plan, DetectionStrategy::Mlt, &l).unwrap(),
                    run_receiver_r2(&plan, &l).unwrap(),
                )
            })
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(a, run(1));
    assert_eq!(a.0.ber.method, BerMethod::MonteCarlo);
}

#[test]
fn equal_gains_give_one_half() {
    let l = link(20, 10.0);
    let r = run_receiver_r1(&TrialPlan::new(100_000, 3, fixed(1.0, 1.0)), DetectionStrategy::Mt, &l).unwrap();
    assert!((r.ber.value - 0.5).abs() < r.ber.ci_halfwidth, "{:?}", r.ber);
}

#[test]
fn fixed_channel_r1_matches_the_conditional_ber() {
    let l = link(150, 0.0);
    let r = run_receiver_r1(
        &TrialPlan::new(200_000, 5, fixed(1.0, 1.625)),
        DetectionStrategy::Mt,
        &l,
    )
    .unwrap();
    let p = cond_ber_r1(1.0, 1.625, 2.3125, &l).unwrap();
    assert!(
        (r.ber.value - p).abs() < 3.0 * r.ber.std_error,
        "{} vs {p}",
        r.ber.value
    );
    let lo = r.ber.value - r.ber.ci_halfwidth;
    assert!(lo > 0.0 && r.bits == 200_000);
}

#[test]
fn block_fading_r1_matches_the_average() {
    let fading = FadingParams::default();
    let mut plan = TrialPlan::new(100_000, 6, ChannelMode::BlockFading(fading));
    plan.coherence_bits = 4;
    for snr in [-5.0, 0.0, 5.0, 10.0] {
        let l = link(20, snr);
        let mc = run_receiver_r1(&plan, DetectionStrategy::Mt, &l).unwrap();
        let a = avg_ber(
            ReceiverKind::R1Csi,
            DetectionStrategy::Mt,
            &l,
            &fading,
            &AvgBerConfig::default(),
        )
        .unwrap();
        let z = (mc.ber.value - a.value) / mc.ber.std_error;
        assert!(z.abs() < 3.0, "snr={snr}: {} vs {} (z={z})", mc.ber.value, a.value);
    }
}

#[test]
fn noiseless_differential_receiver_is_error_free() {
    let l = LinkParams::new(16, 1.0, 1e-12).unwrap();
    let mut plan = TrialPlan::new(5_000, 8, fixed(0.4, 1.7));
    plan.coherence_bits = 10;
    let r = run_receiver_r2(&plan, &l).unwrap();
    assert_eq!(r.errors, 0);
    assert_eq!(r.symbol_errors, 0);
    plan.channel = fixed(1.7, 0.4);
    assert_eq!(run_receiver_r2(&plan, &l).unwrap().errors, 0);
}

#[test]
fn differential_errors_follow_two_p_one_minus_p() {
    // long pilots so the estimated threshold is essentially the midpoint
    let l = link(20, 0.0);
    for (mu, nu) in [(1.0, 1.625), (1.0, 0.625)] {
        let mut plan = TrialPlan::new(400_000, 10, fixed(mu, nu));
        plan.coherence_bits = 200;
        plan.pilot_windows = 4000;
        let r = run_receiver_r2(&plan, &l).unwrap();
        let p = r.symbol_error_rate();
        let expect = 2.0 * p * (1.0 - p);
        assert!(
            (r.ber.value - expect).abs() < 3.0 * r.ber.std_error,
            "({mu},{nu}): {} vs {expect}",
            r.ber.value
        );
        let analytic = cond_ber_r1(mu, nu, 1.0 + 0.5 * (mu + nu), &l).unwrap();
        assert!((p - analytic).abs() < 0.01);
    }
}

#[test]
fn ambient_model_does_not_matter() {
    let l = link(20, 0.0);
    let mut a = TrialPlan::new(200_000, 1, fixed(1.0, 1.625));
    a.ambient = AmbientModel::ConstantEnvelope;
    let mut b = a;
    b.ambient = AmbientModel::ComplexGaussianNormalized;
    b.seed = 2;
    let ra = run_receiver_r1(&a, DetectionStrategy::Mt, &l).unwrap();
    let rb = run_receiver_r1(&b, DetectionStrategy::Mt, &l).unwrap();
    let pv = two_proportion_pvalue(ra.errors as f64, ra.bits as f64, rb.errors as f64, rb.bits as f64);
    assert!(pv > 0.01, "p = {pv}");
}

#[test]
fn error_cap_stops_early() {
    let l = link(20, 0.0);
    let mut plan = TrialPlan::new(10_000_000, 4, ChannelMode::BlockFading(FadingParams::default()));
    plan.max_errors = Some(200);
    plan.batch_blocks = 128;
    let r = run_receiver_r1(&plan, DetectionStrategy::Mt, &l).unwrap();
    assert!(r.errors >= 200 && r.bits < 100_000, "{r:?}");
    assert_eq!(r.bits % 256, 0);
}

#[test]
fn invalid_plans_are_rejected() {
    let l = link(20, 0.0);
    let mut plan = TrialPlan::new(0, 1, fixed(1.0, 2.0));
    assert!(run_receiver_r1(&plan, DetectionStrategy::Mt, &l).is_err());
    plan.n_bits = 10;
    plan.coherence_bits = 1;
    assert!(run_receiver_r2(&plan, &l).is_err());
    let f = FadingParams::default();
    assert!(semi_analytic_avg_ber(ReceiverKind::R1Csi, DetectionStrategy::Mt, &l, &f, 0, 1).is_err());
}

#[test]
fn one_channel_semi_analytic_is_the_conditional_ber() {
    let l = link(150, 0.0);
    let f = FadingParams::default();
    let ch = sample_channels(&f, 1, 42)[0];
    for s in DetectionStrategy::ALL {
        let e = semi_analytic_avg_ber(ReceiverKind::R1Csi, s, &l, &f, 1, 42).unwrap();
        assert_eq!(
            e.value,
            cond_ber_for_strategy(ReceiverKind::R1Csi, s, ch.mu, ch.nu, &l).unwrap()
        );
        assert_eq!(e.method, BerMethod::SemiAnalytic);
    }
}

#[test]
fn r2_averages_the_doubled_error_not_the_average_error() {
    let l = link(20, 5.0);
    let f = FadingParams::default();
    let n = 5000;
    let r1 = semi_analytic_avg_ber(ReceiverKind::R1Csi, DetectionStrategy::Mt, &l, &f, n, 9).unwrap();
    let r2 = semi_analytic_avg_ber(ReceiverKind::R2NoCsi, DetectionStrategy::Mt, &l, &f, n, 9).unwrap();
    let direct: f64 = sample_channels(&f, n, 9)
        .iter()
        .map(|c| {
            let p = cond_ber_for_strategy(ReceiverKind::R1Csi, DetectionStrategy::Mt, c.mu, c.nu, &l).unwrap();
            2.0 * p * (1.0 - p)
        })
        .sum::<f64>()
        / n as f64;
    assert!((r2.value - direct).abs() < 1e-12);
    let jensen = 2.0 * r1.value * (1.0 - r1.value);
    assert!(r2.value < jensen - 1e-3, "{} vs {jensen}", r2.value);
}

#[test]
fn semi_analytic_is_deterministic() {
    let l = link(20, 0.0);
    let f = FadingParams::default();
    let a = semi_analytic_avg_ber(ReceiverKind::R1Csi, DetectionStrategy::Mlt, &l, &f, 3000, 5).unwrap();
    let b = semi_analytic_avg_ber(ReceiverKind::R1Csi, DetectionStrategy::Mlt, &l, &f, 3000, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ambient_names_round_trip() {
    for a in [AmbientModel::ConstantEnvelope, AmbientModel::ComplexGaussianNormalized] {
        assert_eq!(a.name().parse::<AmbientModel>().unwrap(), a);
    }
    assert!("square".parse::<AmbientModel>().is_err());
}
