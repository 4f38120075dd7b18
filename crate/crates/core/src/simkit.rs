//! Symbol-level Monte Carlo of the backscatter link.
//!
//! Every received window is built sample by sample from
//! `y(n) = h_b x(n) + w(n)`; nothing here draws `Y` from its analytic law.
//! Work is split into coherence blocks, each with its own ChaCha8 streams
//! keyed by `(seed, block, purpose)`, and blocks are merged in index order,
//! so results do not depend on the number of threads.

use crate::ber::{cond_ber_for_strategy, BerEstimate, BerMethod, ReceiverKind};
use crate::detection::{threshold, DetectionStrategy};
use crate::energy_stats::LinkParams;
use crate::error::{invalid, Error, Result};
use crate::fading::{sample_channel, ChannelPair, FadingParams};
use crate::stats::{wilson_interval, RunningStats, Z95};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Distribution of the ambient samples `x(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmbientModel {
    /// `√Ē e^{jφ}` with i.i.d. uniform phases.
    #[default]
    ConstantEnvelope,
    /// Complex Gaussian samples rescaled so each window has energy exactly `Ē`.
    ComplexGaussianNormalized,
}

impl AmbientModel {
    pub fn name(&self) -> &'static str {
        match self {
            AmbientModel::ConstantEnvelope => "constant_envelope",
            AmbientModel::ComplexGaussianNormalized => "complex_gaussian_normalized",
        }
    }
}

impl fmt::Display for AmbientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AmbientModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant_envelope" | "constant" => Ok(AmbientModel::ConstantEnvelope),
            "complex_gaussian_normalized" | "gaussian" => Ok(AmbientModel::ComplexGaussianNormalized),
            other => Err(invalid(format!("unknown ambient model '{other}'"))),
        }
    }
}

/// Purpose tags that separate the random streams of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Channel = 0,
    Bits = 1,
    Waveform = 2,
}

const PURPOSES: u64 = 3;

/// Source of independent, reproducible ChaCha8 streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    /// The stream for `purpose` within `block`.
    pub fn stream(&self, block: u64, purpose: StreamPurpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
        rng
    }
}

/// Generates received windows, reusing its sample buffer between calls.
#[derive(Debug, Clone)]
pub struct WindowSampler {
    link: LinkParams,
    ambient: AmbientModel,
    buf: Vec<Complex64>,
}

impl WindowSampler {
    pub fn new(link: LinkParams, ambient: AmbientModel) -> Self {
        WindowSampler {
            link,
            ambient,
            buf: Vec::new(),
        }
    }

    /// One realisation of `Y = (1/N) Σ |y(n)|²` for bit `b`.
    pub fn sample<R: Rng + ?Sized>(&mut self, b: bool, channel: &ChannelPair, rng: &mut R) -> f64 {
        let h = if b { channel.h1 } else { channel.h0 };
        let n = self.link.n_samples as usize;
        let sd = (0.5 * self.link.sigma2).sqrt();
        let amp = self.link.e_bar.sqrt();
        let mut energy = 0.0;
        match self.ambient {
            AmbientModel::ConstantEnvelope => {
                for _ in 0..n {
                    let x = unit_phasor(rng) * amp;
                    energy += received(h, x, sd, rng);
                }
            }
            AmbientModel::ComplexGaussianNormalized => {
                self.buf.clear();
                let mut e = 0.0;
                for _ in 0..n {
                    let x = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    e += x.norm_sqr();
                    self.buf.push(x);
                }
                let scale = (self.link.e_bar * n as f64 / e).sqrt();
                for i in 0..n {
                    let x = self.buf[i] * scale;
                    energy += received(h, x, sd, rng);
                }
            }
        }
        energy / n as f64
    }
}

/// Uniformly distributed point on the unit circle, as the square of a
/// normalised point drawn uniformly from the unit disc (no trigonometry).
#[inline]
fn unit_phasor<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let r = u * u + v * v;
        if r < 1.0 && r > 1e-300 {
            return Complex64::new((u * u - v * v) / r, 2.0 * u * v / r);
        }
    }
}

#[inline]
fn received<R: Rng + ?Sized>(h: Complex64, x: Complex64, sd: f64, rng: &mut R) -> f64 {
    let w_re: f64 = rng.sample(StandardNormal);
    let w_im: f64 = rng.sample(StandardNormal);
    (h * x + Complex64::new(sd * w_re, sd * w_im)).norm_sqr()
}

/// One realisation of `Y` for bit `b` over `channel`.
pub fn simulate_y<R: Rng + ?Sized>(
    b: bool,
    channel: &ChannelPair,
    link: &LinkParams,
    ambient: AmbientModel,
    rng: &mut R,
) -> f64 {
    WindowSampler::new(*link, ambient).sample(b, channel, rng)
}

/// `count` windows for bit `b` over a fixed channel, generated in
/// deterministic blocks on the rayon pool.
pub fn simulate_y_many(
    b: bool,
    channel: &ChannelPair,
    link: &LinkParams,
    ambient: AmbientModel,
    count: usize,
    seed: u64,
) -> Vec<f64> {
    const BLOCK: usize = 1 << 14;
    let streams = Streams::new(seed);
    let mut out: Vec<f64> = vec![0.0; count];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(k, chunk)| {
        let mut rng = streams.stream(k as u64, StreamPurpose::Waveform);
        let mut sampler = WindowSampler::new(*link, ambient);
        for y in chunk.iter_mut() {
            *y = sampler.sample(b, channel, &mut rng);
        }
    });
    out
}

/// Where the channel of each coherence block comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelMode {
    Fixed(ChannelPair),
    /// Independent draw per coherence block.
    BlockFading(FadingParams),
}

/// Monte Carlo run description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlan {
    /// Cap on message bits.
    pub n_bits: u64,
    pub seed: u64,
    pub channel: ChannelMode,
    /// Symbols sharing one channel draw.
    pub coherence_bits: u32,
    /// Stop once this many errors are seen (checked after each batch).
    pub max_errors: Option<u64>,
    pub ambient: AmbientModel,
    /// Pilot windows per block for the receiver without CSI, half of each symbol.
    pub pilot_windows: u32,
    /// Blocks processed between stopping checks.
    pub batch_blocks: u32,
}

impl TrialPlan {
    pub fn new(n_bits: u64, seed: u64, channel: ChannelMode) -> Self {
        TrialPlan {
            n_bits,
            seed,
            channel,
            coherence_bits: 2,
            max_errors: None,
            ambient: AmbientModel::ConstantEnvelope,
            pilot_windows: 16,
            batch_blocks: 256,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_bits == 0 {
            return Err(invalid("n_bits must be positive"));
        }
        if self.coherence_bits < 2 {
            return Err(invalid(format!(
                "coherence_bits must be at least 2, got {}",
                self.coherence_bits
            )));
        }
        if self.pilot_windows < 2 || !self.pilot_windows.is_multiple_of(2) {
            return Err(invalid(format!(
                "pilot_windows must be even and at least 2, got {}",
                self.pilot_windows
            )));
        }
        if self.batch_blocks == 0 {
            return Err(invalid("batch_blocks must be positive"));
        }
        Ok(())
    }
}

/// Raw counts of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimReport {
    pub ber: BerEstimate,
    pub bits: u64,
    pub errors: u64,
    pub blocks: u64,
    /// Single-symbol decision errors under the correct polarity.
    pub symbol_errors: u64,
    pub symbols: u64,
}

impl SimReport {
    /// Fraction of symbols decided wrongly.
    pub fn symbol_error_rate(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockCounts {
    bits: u64,
    errors: u64,
    symbols: u64,
    symbol_errors: u64,
}

fn block_channel(plan: &TrialPlan, streams: &Streams, block: u64) -> ChannelPair {
    match plan.channel {
        ChannelMode::Fixed(c) => c,
        ChannelMode::BlockFading(f) => sample_channel(&mut streams.stream(block, StreamPurpose::Channel), &f),
    }
}

/// Runs blocks in batches until the bit cap or the error cap is reached.
fn run_blocks<F>(plan: &TrialPlan, bits_per_block: u64, body: F) -> Result<SimReport>
where
    F: Fn(u64, u64) -> Result<BlockCounts> + Sync,
{
    plan.validate()?;
    let total_blocks = plan.n_bits.div_ceil(bits_per_block);
    let mut per_block: Vec<BlockCounts> = Vec::new();
    let mut errors = 0u64;
    let mut next = 0u64;
    while next < total_blocks {
        let end = (next + plan.batch_blocks as u64).min(total_blocks);
        let batch = (next..end)
            .into_par_iter()
            .map(|k| {
                let bits = bits_per_block.min(plan.n_bits - k * bits_per_block);
                body(k, bits)
            })
            .collect::<Result<Vec<_>>>()?;
        errors += batch.iter().map(|c| c.errors).sum::<u64>();
        per_block.extend(batch);
        next = end;
        if plan.max_errors.is_some_and(|m| errors >= m) {
            break;
        }
    }
    Ok(summarise(&per_block))
}

/// Ratio estimate with a cluster-robust variance; the Wilson interval uses
/// the effective sample size implied by the design effect.
fn summarise(blocks: &[BlockCounts]) -> SimReport {
    let bits: u64 = blocks.iter().map(|c| c.bits).sum();
    let errors: u64 = blocks.iter().map(|c| c.errors).sum();
    let n = bits as f64;
    let p = errors as f64 / n;
    let m = blocks.len() as f64;
    let var = if m > 1.0 {
        let ss: f64 = blocks
            .iter()
            .map(|c| (c.errors as f64 - p * c.bits as f64).powi(2))
            .sum();
        m / (m - 1.0) * ss / (n * n)
    } else {
        p * (1.0 - p) / n
    };
    let binom = p * (1.0 - p) / n;
    let n_eff = if var > 0.0 && binom > 0.0 {
        (n * binom / var).min(n)
    } else {
        n
    };
    let (lo, hi) = wilson_interval(p * n_eff, n_eff, Z95);
    SimReport {
        ber: BerEstimate {
            value: p,
            method: BerMethod::MonteCarlo,
            ci_halfwidth: 0.5 * (hi - lo),
            std_error: var.sqrt(),
            samples: bits,
        },
        bits,
        errors,
        blocks: blocks.len() as u64,
        symbol_errors: blocks.iter().map(|c| c.symbol_errors).sum(),
        symbols: blocks.iter().map(|c| c.symbols).sum(),
    }
}

/// Receiver with CSI: per block it knows `(μ, ν)`, sets the strategy's
/// threshold and decides `b = 1` on the side of the larger gain.
pub fn run_receiver_r1(plan: &TrialPlan, strategy: DetectionStrategy, link: &LinkParams) -> Result<SimReport> {
    let streams = Streams::new(plan.seed);
    let l = plan.coherence_bits as u64;
    run_blocks(plan, l, |k, bits| {
        let ch = block_channel(plan, &streams, k);
        let t = threshold(strategy, ch.mu, ch.nu, link)?.value;
        let one_high = ch.nu >= ch.mu;
        let mut bit_rng = streams.stream(k, StreamPurpose::Bits);
        let mut wave = streams.stream(k, StreamPurpose::Waveform);
        let mut sampler = WindowSampler::new(*link, plan.ambient);
        let mut errors = 0;
        for _ in 0..bits {
            let b: bool = bit_rng.random();
            let y = sampler.sample(b, &ch, &mut wave);
            if ((y > t) == one_high) != b {
                errors += 1;
            }
        }
        Ok(BlockCounts {
            bits,
            errors,
            symbols: bits,
            symbol_errors: errors,
        })
    })
}

/// Receiver without CSI. Each block starts with `pilot_windows` known
/// windows (alternating 0 and 1) whose mean energies set a midpoint
/// threshold, then sends a reference symbol and `coherence_bits - 1`
/// differentially encoded message bits, `b(n) = b(n-1) ⊕ m(n)`. Decoding
/// takes `b̂(n) ⊕ b̂(n-1)`, which does not need to know which gain is larger.
pub fn run_receiver_r2(plan: &TrialPlan, link: &LinkParams) -> Result<SimReport> {
    let streams = Streams::new(plan.seed);
    let l = plan.coherence_bits as u64;
    run_blocks(plan, l - 1, |k, bits| {
        let ch = block_channel(plan, &streams, k);
        let mut bit_rng = streams.stream(k, StreamPurpose::Bits);
        let mut wave = streams.stream(k, StreamPurpose::Waveform);
        let mut sampler = WindowSampler::new(*link, plan.ambient);
        let (mut e0, mut e1) = (0.0, 0.0);
        for i in 0..plan.pilot_windows {
            if i % 2 == 0 {
                e0 += sampler.sample(false, &ch, &mut wave);
            } else {
                e1 += sampler.sample(true, &ch, &mut wave);
            }
        }
        let half = 0.5 * plan.pilot_windows as f64;
        let t = 0.5 * (e0 + e1) / half;
        let one_high = ch.nu >= ch.mu;
        let decide = |b: bool, sampler: &mut WindowSampler, wave: &mut ChaCha8Rng| sampler.sample(b, &ch, wave) > t;
        let mut prev: bool = bit_rng.random();
        let mut prev_hat = decide(prev, &mut sampler, &mut wave);
        let mut c = BlockCounts {
            bits,
            symbols: 1,
            symbol_errors: ((prev_hat == one_high) != prev) as u64,
            ..Default::default()
        };
        for _ in 0..bits {
            let m: bool = bit_rng.random();
            let b = prev ^ m;
            let b_hat = decide(b, &mut sampler, &mut wave);
            if (b_hat ^ prev_hat) != m {
                c.errors += 1;
            }
            c.symbols += 1;
            c.symbol_errors += ((b_hat == one_high) != b) as u64;
            prev = b;
            prev_hat = b_hat;
        }
        Ok(c)
    })
}

/// `n` channel draws, the `i`-th from block `i` of the channel stream.
pub fn sample_channels(fading: &FadingParams, n: usize, seed: u64) -> Vec<ChannelPair> {
    let streams = Streams::new(seed);
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_channel(&mut streams.stream(i, StreamPurpose::Channel), fading))
        .collect()
}

/// Mean of the conditional BER over `n_channels` sampled channels, with a
/// normal 95% interval.
pub fn semi_analytic_avg_ber(
    receiver: ReceiverKind,
    strategy: DetectionStrategy,
    link: &LinkParams,
    fading: &FadingParams,
    n_channels: usize,
    seed: u64,
) -> Result<BerEstimate> {
    if n_channels == 0 {
        return Err(invalid("n_channels must be at least 1"));
    }
    const CHUNK: usize = 1024;
    let channels = sample_channels(fading, n_channels, seed);
    let parts = channels
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = RunningStats::default();
            for ch in chunk {
                s.push(cond_ber_for_strategy(receiver, strategy, ch.mu, ch.nu, link)?);
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = RunningStats::default();
    for p in &parts {
        total.merge(p);
    }
    let se = total.std_error();
    Ok(BerEstimate {
        value: total.mean(),
        method: BerMethod::SemiAnalytic,
        ci_halfwidth: Z95 * se,
        std_error: se,
        samples: n_channels as u64,
    })
}
