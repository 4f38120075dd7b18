use crate::config::{Experiment, ExperimentConfig};
use amber_core::ber::{avg_ber, cond_ber_r1, cond_ber_r2, AvgBerConfig};
use amber_core::detection::threshold;
use amber_core::energy_stats::{cond_moments, cond_pdf_y, cond_pdf_y_gauss1, cond_pdf_y_gauss2};
use amber_core::simkit::{
    run_receiver_r1, run_receiver_r2, semi_analytic_avg_ber, simulate_y_many, ChannelMode, TrialPlan,
};
use amber_core::{BerEstimate, ChannelPair, DetectionStrategy, LinkParams, ReceiverKind};
use std::fmt::Write as _;

/// Why a run failed. Usage problems map to exit status 2, the rest to 1.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Numeric(String),
}

impl From<amber_core::Error> for RunError {
    fn from(e: amber_core::Error) -> Self {
        RunError::Numeric(e.to_string())
    }
}

/// A finished CSV artifact.
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
    /// Grid points where `validate` found disagreeing estimates.
    pub failures: usize,
}

struct Csv {
    buf: String,
}

impl Csv {
    fn new(cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        let mut buf = format!("# amber {} {}\n", cfg.experiment.name(), env!("CARGO_PKG_VERSION"));
        for line in cfg.render().lines() {
            buf.push_str("# ");
            buf.push_str(line);
            buf.push('\n');
        }
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Csv { buf }
    }

    fn row(&mut self, fields: &[Field]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match f {
                Field::F(x) if x.is_nan() => self.buf.push_str("nan"),
                Field::F(x) => {
                    let _ = write!(self.buf, "{x:.16e}");
                }
                Field::U(x) => {
                    let _ = write!(self.buf, "{x}");
                }
                Field::S(s) => self.buf.push_str(s),
            }
        }
        self.buf.push('\n');
    }
}

enum Field<'a> {
    F(f64),
    U(u64),
    S(&'a str),
}

/// Seed of the `k`-th grid point.
fn point_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn link(cfg: &ExperimentConfig, n: u32, snr_db: f64) -> Result<LinkParams, RunError> {
    Ok(LinkParams::from_snr_db(n, snr_db, cfg.e_bar)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    let contents = match cfg.experiment {
        Experiment::PdfCompare => pdf_compare(cfg)?,
        Experiment::BerVsN | Experiment::BerVsSnr => ber_sweep(cfg)?,
        Experiment::ThresholdTable => threshold_table(cfg)?,
        Experiment::Validate => return validate(cfg),
    };
    Ok(Artifact {
        file_name: format!("{}.csv", cfg.experiment.name()),
        contents,
        failures: 0,
    })
}

/// Exact and approximate densities of `Y` next to a normalised histogram of
/// simulated windows, for each fixture and hypothesis.
fn pdf_compare(cfg: &ExperimentConfig) -> Result<String, RunError> {
    let mut csv = Csv::new(
        cfg,
        &[
            "n",
            "snr_db",
            "mu",
            "nu",
            "hypothesis",
            "t",
            "exact",
            "gauss1",
            "gauss2",
            "simulated_hist",
        ],
    );
    let mut k = 0;
    for &n in &cfg.n {
        for &snr in &cfg.snr_db {
            let l = link(cfg, n, snr)?;
            for &(mu, nu) in &cfg.fixtures {
                let channel = ChannelPair::from_gains(mu, nu)?;
                // shared bin grid covering both hypotheses
                let span = |g: f64| {
                    let (m, v) = cond_moments(g, &l);
                    (m - 6.0 * v.sqrt(), m + 6.0 * v.sqrt())
                };
                let lo = span(mu).0.min(span(nu).0).max(0.0);
                let hi = span(mu).1.max(span(nu).1);
                let width = (hi - lo) / cfg.bins as f64;
                for (label, b, g) in [("h0", false, mu), ("h1", true, nu)] {
                    eprintln!("pdf_compare: N={n} snr={snr} dB ({mu}, {nu}) {label}");
                    let ys = simulate_y_many(b, &channel, &l, cfg.ambient, cfg.windows, point_seed(cfg.seed, k));
                    k += 1;
                    let mut counts = vec![0u64; cfg.bins];
                    for y in ys {
                        let i = ((y - lo) / width).floor();
                        if i >= 0.0 && (i as usize) < cfg.bins {
                            counts[i as usize] += 1;
                        }
                    }
                    for (i, &count) in counts.iter().enumerate() {
                        let t = lo + (i as f64 + 0.5) * width;
                        let hist = count as f64 / (cfg.windows as f64 * width);
                        csv.row(&[
                            Field::U(n as u64),
                            Field::F(snr),
                            Field::F(mu),
                            Field::F(nu),
                            Field::S(label),
                            Field::F(t),
                            Field::F(cond_pdf_y(t, g, &l)?),
                            Field::F(cond_pdf_y_gauss1(t, g, &l).unwrap_or(f64::NAN)),
                            Field::F(cond_pdf_y_gauss2(t, g, &l)?),
                            Field::F(hist),
                        ]);
                    }
                }
            }
        }
    }
    Ok(csv.buf)
}

struct SweepPoint {
    n: u32,
    snr_db: f64,
    receiver: ReceiverKind,
    strategy: DetectionStrategy,
    analytic: BerEstimate,
    semi: Option<BerEstimate>,
    mc: Option<BerEstimate>,
}

fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>, RunError> {
    let fading = cfg.fading()?;
    let quad = AvgBerConfig {
        abs_tol: cfg.abs_tol,
        rel_tol: cfg.rel_tol,
        truncation: cfg.truncation,
        ..AvgBerConfig::default()
    };
    // ber_vs_n varies N fastest, ber_vs_snr varies the SNR fastest
    let mut grid = Vec::new();
    if cfg.experiment == Experiment::BerVsN {
        for &s in &cfg.snr_db {
            grid.extend(cfg.n.iter().map(|&n| (n, s)));
        }
    } else {
        for &n in &cfg.n {
            grid.extend(cfg.snr_db.iter().map(|&s| (n, s)));
        }
    }
    let mut out = Vec::new();
    let mut k = 0;
    for (n, snr_db) in grid {
        let l = link(cfg, n, snr_db)?;
        for &receiver in &cfg.receivers {
            for &strategy in &cfg.strategies {
                eprintln!("{}: N={n} snr={snr_db} dB {receiver} {strategy}", cfg.experiment.name());
                let seed = point_seed(cfg.seed, k);
                k += 1;
                let analytic = avg_ber(receiver, strategy, &l, &fading, &quad)?;
                let semi = if cfg.semi_channels > 0 {
                    Some(semi_analytic_avg_ber(
                        receiver,
                        strategy,
                        &l,
                        &fading,
                        cfg.semi_channels,
                        seed,
                    )?)
                } else {
                    None
                };
                let mut plan = TrialPlan::new(cfg.mc_bits, seed ^ 1, ChannelMode::BlockFading(fading));
                plan.coherence_bits = cfg.coherence_bits;
                plan.pilot_windows = cfg.pilot_windows;
                plan.ambient = cfg.ambient;
                plan.max_errors = (cfg.mc_max_errors > 0).then_some(cfg.mc_max_errors);
                // the receiver without CSI always sets its threshold at the pilot midpoint
                let mc = match receiver {
                    _ if cfg.mc_bits == 0 => None,
                    ReceiverKind::R1Csi => Some(run_receiver_r1(&plan, strategy, &l)?.ber),
                    ReceiverKind::R2NoCsi if strategy == DetectionStrategy::Mt => Some(run_receiver_r2(&plan, &l)?.ber),
                    ReceiverKind::R2NoCsi => None,
                };
                out.push(SweepPoint {
                    n,
                    snr_db,
                    receiver,
                    strategy,
                    analytic,
                    semi,
                    mc,
                });
            }
        }
    }
    Ok(out)
}

const SWEEP_COLUMNS: [&str; 8] = [
    "snr_db",
    "n",
    "receiver",
    "strategy",
    "ber_analytic",
    "ber_semianalytic",
    "ber_mc",
    "mc_ci_halfwidth",
];

fn sweep_fields(p: &SweepPoint) -> Vec<Field<'static>> {
    vec![
        Field::F(p.snr_db),
        Field::U(p.n as u64),
        Field::S(p.receiver.name()),
        Field::S(p.strategy.name()),
        Field::F(p.analytic.value),
        Field::F(p.semi.map_or(f64::NAN, |e| e.value)),
        Field::F(p.mc.map_or(f64::NAN, |e| e.value)),
        Field::F(p.mc.map_or(f64::NAN, |e| e.ci_halfwidth)),
    ]
}

fn ber_sweep(cfg: &ExperimentConfig) -> Result<String, RunError> {
    let mut csv = Csv::new(cfg, &SWEEP_COLUMNS);
    for p in sweep_points(cfg)? {
        csv.row(&sweep_fields(&p));
    }
    Ok(csv.buf)
}

fn threshold_table(cfg: &ExperimentConfig) -> Result<String, RunError> {
    let mut csv = Csv::new(
        cfg,
        &[
            "n",
            "snr_db",
            "mu",
            "nu",
            "strategy",
            "threshold",
            "threshold_over_sigma2",
            "ber_r1",
            "ber_r2",
        ],
    );
    for &n in &cfg.n {
        for &snr in &cfg.snr_db {
            let l = link(cfg, n, snr)?;
            for &(mu, nu) in &cfg.fixtures {
                for &s in &cfg.strategies {
                    // equal gains have no separating threshold
                    let (t, r1, r2) = match threshold(s, mu, nu, &l) {
                        Ok(t) => (
                            t.value,
                            cond_ber_r1(mu, nu, t.value, &l)?,
                            cond_ber_r2(mu, nu, t.value, &l)?,
                        ),
                        Err(amber_core::Error::NoUniqueThreshold(_)) => (f64::NAN, 0.5, 0.5),
                        Err(e) => return Err(e.into()),
                    };
                    csv.row(&[
                        Field::U(n as u64),
                        Field::F(snr),
                        Field::F(mu),
                        Field::F(nu),
                        Field::S(s.name()),
                        Field::F(t),
                        Field::F(t / l.sigma2),
                        Field::F(r1),
                        Field::F(r2),
                    ]);
                }
            }
        }
    }
    Ok(csv.buf)
}

/// Largest pairwise z-score among the available estimates.
fn max_z(p: &SweepPoint) -> f64 {
    let all: Vec<BerEstimate> = [Some(p.analytic), p.semi, p.mc].into_iter().flatten().collect();
    let mut worst: f64 = 0.0;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let se = all[i].std_error.hypot(all[j].std_error);
            worst = worst.max((all[i].value - all[j].value).abs() / se);
        }
    }
    worst
}

/// The sweep of the configured grid with a z-score check between the
/// quadrature, channel-sampled and symbol-level estimates.
fn validate(cfg: &ExperimentConfig) -> Result<Artifact, RunError> {
    if cfg.semi_channels == 0 && cfg.mc_bits == 0 {
        return Err(RunError::Usage(
            "validate needs semi_channels > 0 or mc_bits > 0".into(),
        ));
    }
    let mut columns = SWEEP_COLUMNS.to_vec();
    columns.extend(["max_z", "pass"]);
    let mut csv = Csv::new(cfg, &columns);
    let mut failures = 0;
    for p in sweep_points(cfg)? {
        let z = max_z(&p);
        let pass = z < cfg.z_max;
        if !pass {
            failures += 1;
            eprintln!(
                "validate: disagreement at N={} snr={} dB {} {} (z = {z:.2})",
                p.n, p.snr_db, p.receiver, p.strategy
            );
        }
        let mut fields = sweep_fields(&p);
        fields.push(Field::F(z));
        fields.push(Field::U(pass as u64));
        csv.row(&fields);
    }
    Ok(Artifact {
        file_name: "validate.csv".into(),
        contents: csv.buf,
        failures,
    })
}
