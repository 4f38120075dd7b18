//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, list values are comma
//! separated. Unknown keys are rejected. Every key has a default, so an empty
//! file describes a valid (small) run of any experiment.

use amber_core::simkit::AmbientModel;
use amber_core::{AlphaConvention, DetectionStrategy, FadingParams, ReceiverKind};
use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    PdfCompare,
    BerVsN,
    BerVsSnr,
    ThresholdTable,
    Validate,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::PdfCompare => "pdf_compare",
            Experiment::BerVsN => "ber_vs_n",
            Experiment::BerVsSnr => "ber_vs_snr",
            Experiment::ThresholdTable => "threshold_table",
            Experiment::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: Vec<u32>,
    pub snr_db: Vec<f64>,
    /// `(μ, ν)` gain pairs for the fixed-channel experiments.
    pub fixtures: Vec<(f64, f64)>,
    pub receivers: Vec<ReceiverKind>,
    pub strategies: Vec<DetectionStrategy>,
    pub ambient: AmbientModel,
    pub seed: u64,
    pub e_bar: f64,
    pub sigma_h2: f64,
    pub alpha_loss_db: f64,
    pub alpha_convention: AlphaConvention,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub truncation: f64,
    /// Channel draws for the semi-analytic average; 0 skips it.
    pub semi_channels: usize,
    /// Message-bit cap for the symbol-level simulation; 0 skips it.
    pub mc_bits: u64,
    /// Early stop after this many bit errors; 0 disables.
    pub mc_max_errors: u64,
    pub coherence_bits: u32,
    pub pilot_windows: u32,
    /// Simulated windows per hypothesis in `pdf_compare`.
    pub windows: usize,
    pub bins: usize,
    /// Largest accepted pairwise z-score in `validate`.
    pub z_max: f64,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let validating = experiment == Experiment::Validate;
        ExperimentConfig {
            experiment,
            n: vec![150],
            snr_db: vec![0.0],
            fixtures: vec![(1.0, 1.625)],
            receivers: vec![ReceiverKind::R1Csi],
            strategies: vec![DetectionStrategy::Mt],
            ambient: AmbientModel::ConstantEnvelope,
            seed: 1,
            e_bar: 1.0,
            sigma_h2: 1.0,
            alpha_loss_db: 1.1,
            alpha_convention: AlphaConvention::Amplitude,
            abs_tol: 1e-9,
            rel_tol: 1e-6,
            truncation: 1e-9,
            semi_channels: if validating { 20_000 } else { 0 },
            mc_bits: if validating { 1_000_000 } else { 0 },
            mc_max_errors: 0,
            coherence_bits: 2,
            pilot_windows: 16,
            windows: 100_000,
            bins: 100,
            z_max: 3.0,
        }
    }

    /// Parses configuration text on top of the defaults.
    pub fn parse(experiment: Experiment, text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::defaults(experiment);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`", i + 1));
            };
            c.set(key.trim(), value.trim())
                .map_err(|e| ConfigError(format!("line {}: {}", i + 1, e.0)))?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => {
                if value != self.experiment.name() {
                    return err(format!("config is for '{value}', not '{}'", self.experiment.name()));
                }
            }
            "n" => self.n = list(value)?,
            "snr_db" => self.snr_db = list(value)?,
            "fixtures" => {
                self.fixtures = split(value)
                    .map(|item| {
                        let Some((mu, nu)) = item.split_once(':') else {
                            return err(format!("fixture '{item}' is not `mu:nu`"));
                        };
                        Ok((scalar(mu.trim())?, scalar(nu.trim())?))
                    })
                    .collect::<Result<_, _>>()?
            }
            "receiver" => self.receivers = list(value)?,
            "strategy" => {
                self.strategies = if value == "all" {
                    DetectionStrategy::ALL.to_vec()
                } else {
                    list(value)?
                }
            }
            "ambient" => self.ambient = scalar(value)?,
            "seed" => self.seed = scalar(value)?,
            "e_bar" => self.e_bar = scalar(value)?,
            "sigma_h2" => self.sigma_h2 = scalar(value)?,
            "alpha_loss_db" => self.alpha_loss_db = scalar(value)?,
            "alpha_convention" => {
                self.alpha_convention = match value {
                    "amplitude" => AlphaConvention::Amplitude,
                    "power" => AlphaConvention::Power,
                    other => return err(format!("unknown alpha_convention '{other}'")),
                }
            }
            "abs_tol" => self.abs_tol = scalar(value)?,
            "rel_tol" => self.rel_tol = scalar(value)?,
            "truncation" => self.truncation = scalar(value)?,
            "semi_channels" => self.semi_channels = scalar(value)?,
            "mc_bits" => self.mc_bits = scalar(value)?,
            "mc_max_errors" => self.mc_max_errors = scalar(value)?,
            "coherence_bits" => self.coherence_bits = scalar(value)?,
            "pilot_windows" => self.pilot_windows = scalar(value)?,
            "windows" => self.windows = scalar(value)?,
            "bins" => self.bins = scalar(value)?,
            "z_max" => self.z_max = scalar(value)?,
            other => return err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n.is_empty() || self.snr_db.is_empty() || self.fixtures.is_empty() {
            return err("n, snr_db and fixtures must be non-empty");
        }
        if self.receivers.is_empty() || self.strategies.is_empty() {
            return err("receiver and strategy must be non-empty");
        }
        if self.n.contains(&0) {
            return err("n must be positive");
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return err("snr_db must be finite");
        }
        if self
            .fixtures
            .iter()
            .any(|&(mu, nu)| !(mu >= 0.0 && nu >= 0.0 && mu.is_finite() && nu.is_finite()))
        {
            return err("fixture gains must be finite and non-negative");
        }
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("truncation", self.truncation),
            ("e_bar", self.e_bar),
            ("z_max", self.z_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("{name} must be positive"));
            }
        }
        if !(self.rel_tol >= 0.0) || self.truncation >= 0.1 {
            return err("rel_tol must be >= 0 and truncation < 0.1");
        }
        if self.coherence_bits < 2 || self.pilot_windows < 2 || !self.pilot_windows.is_multiple_of(2) {
            return err("coherence_bits must be >= 2 and pilot_windows even and >= 2");
        }
        if self.windows == 0 || self.bins == 0 {
            return err("windows and bins must be positive");
        }
        self.fading().map_err(|e| ConfigError(e.to_string()))?;
        Ok(())
    }

    pub fn fading(&self) -> amber_core::Result<FadingParams> {
        FadingParams::from_loss_db(self.sigma_h2, self.alpha_loss_db, self.alpha_convention)
    }

    /// The resolved configuration, one `key = value` per line, in a form
    /// [`ExperimentConfig::parse`] reads back.
    pub fn render(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", self.experiment.name().into());
        kv("n", join(self.n.iter().map(|x| x.to_string()).collect()));
        kv("snr_db", join(self.snr_db.iter().map(|x| x.to_string()).collect()));
        kv(
            "fixtures",
            join(self.fixtures.iter().map(|(a, b)| format!("{a}:{b}")).collect()),
        );
        kv(
            "receiver",
            join(self.receivers.iter().map(|r| r.name().to_string()).collect()),
        );
        kv(
            "strategy",
            join(self.strategies.iter().map(|r| r.name().to_string()).collect()),
        );
        kv("ambient", self.ambient.name().into());
        kv("seed", self.seed.to_string());
        kv("e_bar", self.e_bar.to_string());
        kv("sigma_h2", self.sigma_h2.to_string());
        kv("alpha_loss_db", self.alpha_loss_db.to_string());
        kv(
            "alpha_convention",
            match self.alpha_convention {
                AlphaConvention::Amplitude => "amplitude",
                AlphaConvention::Power => "power",
            }
            .into(),
        );
        kv("abs_tol", self.abs_tol.to_string());
        kv("rel_tol", self.rel_tol.to_string());
        kv("truncation", self.truncation.to_string());
        kv("semi_channels", self.semi_channels.to_string());
        kv("mc_bits", self.mc_bits.to_string());
        kv("mc_max_errors", self.mc_max_errors.to_string());
        kv("coherence_bits", self.coherence_bits.to_string());
        kv("pilot_windows", self.pilot_windows.to_string());
        kv("windows", self.windows.to_string());
        kv("bins", self.bins.to_string());
        kv("z_max", self.z_max.to_string());
        s
    }
}

fn split(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn scalar<T: FromStr>(value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError(format!("cannot parse '{value}': {e}")))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    split(value).map(scalar).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_comments_and_fixtures() {
        let text = "# sweep\nn = 20, 150\nsnr_db = -5,0 ,5  # trailing\nfixtures = 1:1.625, 1:0.625\nstrategy = all\nreceiver = r1, r2\n";
        let c = ExperimentConfig::parse(Experiment::BerVsSnr, text).unwrap();
        assert_eq!(c.n, vec![20, 150]);
        assert_eq!(c.snr_db, vec![-5.0, 0.0, 5.0]);
        assert_eq!(c.fixtures, vec![(1.0, 1.625), (1.0, 0.625)]);
        assert_eq!(c.strategies.len(), 4);
        assert_eq!(c.receivers, vec![ReceiverKind::R1Csi, ReceiverKind::R2NoCsi]);
    }

    #[test]
    fn rendered_config_parses_back() {
        let mut c = ExperimentConfig::defaults(Experiment::Validate);
        c.snr_db = vec![-2.5, 10.0];
        c.alpha_convention = AlphaConvention::Power;
        c.strategies = DetectionStrategy::ALL.to_vec();
        let back = ExperimentConfig::parse(Experiment::Validate, &c.render()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = [
            "n = ",
            "n = 0",
            "colour = red",
            "abs_tol = 0",
            "snr_db = x",
            "fixtures = 1",
            "pilot_windows = 3",
            "experiment = validate",
            "just text",
        ];
        for text in bad {
            assert!(ExperimentConfig::parse(Experiment::BerVsN, text).is_err(), "{text}");
        }
    }

    #[test]
    fn shipped_configs_parse() {
        let shipped = [
            (Experiment::PdfCompare, include_str!("../../../configs/pdf_compare.cfg")),
            (Experiment::BerVsN, include_str!("../../../configs/ber_vs_n.cfg")),
            (Experiment::BerVsSnr, include_str!("../../../configs/ber_vs_snr.cfg")),
            (
                Experiment::ThresholdTable,
                include_str!("../../../configs/thresholds.cfg"),
            ),
            (Experiment::Validate, include_str!("../../../configs/validate.cfg")),
        ];
        for (e, text) in shipped {
            ExperimentConfig::parse(e, text).unwrap();
        }
    }
}
