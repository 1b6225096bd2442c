//! Monte-Carlo harness: detection error rate, BER/BLER after detection, PAPR CCDF.
//!
//! Trial `i` of a sweep always draws the same info bits, channel, offset and unit
//! noise sequence from `(seed, i)`; only the noise scale changes with the SNR. Points
//! of a sweep, and runs in different CSI modes, are therefore paired. Noise-only
//! windows come from a separate stream.
//!
//! A message window counts as a misdetection when nothing is declared and as a
//! synchronization error when `|tau_hat - tau_off| > n_M`. Bit and block errors are
//! only counted on windows that pass both checks.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::chansim::{snr_to_noise_var, ChannelModel, CHANNEL_MEMORY};
use crate::error::{Error, Result};
use crate::receiver::{Receiver, RxScratch};

pub const STREAM_MESSAGE: u64 = 1;
pub const STREAM_NONE: u64 = 2;
/// Two-sided 95% normal quantile used for Wilson intervals.
const Z95: f64 = 1.959963984540054;
/// Trials evaluated between checks of the block-error stopping rule.
const CHUNK: usize = 512;
/// Minimum number of frames for a PAPR CCDF.
pub const MIN_PAPR_FRAMES: usize = 1000;

/// Independent generator for trial `index` of `stream`.
pub fn trial_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(stream);
    r.set_word_pos(2 * index as u128);
    ChaCha8Rng::seed_from_u64(r.next_u64())
}

/// Wilson score interval at 95% confidence.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

/// Raw counts for one sweep point, with bit and block errors kept per IEDD round.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointStats {
    pub snr_db: f64,
    pub n: usize,
    pub trials: u64,
    pub misdetections: u64,
    pub sync_errors: u64,
    pub false_alarms: u64,
    pub none_trials: u64,
    /// Message windows that passed detection and synchronization.
    pub blocks: u64,
    pub bits_per_block: u64,
    pub bit_errors: Vec<u64>,
    pub block_errors: Vec<u64>,
}

impl PointStats {
    fn empty(snr_db: f64, n: usize, k: usize, rounds: usize) -> Self {
        PointStats {
            snr_db,
            n,
            bits_per_block: k as u64,
            bit_errors: vec![0; rounds],
            block_errors: vec![0; rounds],
            ..Default::default()
        }
    }

    fn add(&mut self, o: &TrialOutcome) {
        self.trials += 1;
        match o {
            TrialOutcome::Missed => self.misdetections += 1,
            TrialOutcome::SyncError => self.sync_errors += 1,
            TrialOutcome::Synced(errs) => {
                self.blocks += 1;
                for (r, &e) in errs.iter().enumerate() {
                    self.bit_errors[r] += e as u64;
                    self.block_errors[r] += u64::from(e > 0);
                }
            }
        }
    }

    pub fn der(&self) -> f64 {
        ratio(self.misdetections + self.sync_errors, self.trials)
    }

    pub fn far(&self) -> f64 {
        ratio(self.false_alarms, self.none_trials)
    }

    /// BER after IEDD round `round` (1-based).
    pub fn ber(&self, round: usize) -> f64 {
        ratio(self.bit_errors[round - 1], self.blocks * self.bits_per_block)
    }

    /// BLER after IEDD round `round` (1-based).
    pub fn bler(&self, round: usize) -> f64 {
        ratio(self.block_errors[round - 1], self.blocks)
    }

    /// Output record for IEDD round `round` (1-based).
    pub fn record(&self, round: usize, config_hash: &str) -> MetricRecord {
        let r = round - 1;
        let bits = self.blocks * self.bits_per_block;
        let det_err = self.misdetections + self.sync_errors;
        let (der_lo, der_hi) = wilson(det_err, self.trials);
        let (ber_lo, ber_hi) = wilson(self.bit_errors[r], bits);
        let (bler_lo, bler_hi) = wilson(self.block_errors[r], self.blocks);
        let (far_lo, far_hi) = wilson(self.false_alarms, self.none_trials);
        MetricRecord {
            snr_db: self.snr_db,
            trials: self.trials,
            misdetections: self.misdetections,
            sync_errors: self.sync_errors,
            false_alarms: self.false_alarms,
            none_trials: self.none_trials,
            bit_errors: self.bit_errors[r],
            bits,
            block_errors: self.block_errors[r],
            blocks: self.blocks,
            der: self.der(),
            ber: ratio(self.bit_errors[r], bits),
            bler: ratio(self.block_errors[r], self.blocks),
            config_hash: config_hash.to_string(),
            far: self.far(),
            der_lo,
            der_hi,
            ber_lo,
            ber_hi,
            bler_lo,
            bler_hi,
            far_lo,
            far_hi,
            n: self.n,
            l_iedd: round,
        }
    }
}

/// One output row. The first fourteen columns are the core record; the rest are the
/// false-alarm rate, Wilson bounds, block length and the IEDD round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub snr_db: f64,
    pub trials: u64,
    pub misdetections: u64,
    pub sync_errors: u64,
    pub false_alarms: u64,
    pub none_trials: u64,
    pub bit_errors: u64,
    pub bits: u64,
    pub block_errors: u64,
    pub blocks: u64,
    pub der: f64,
    pub ber: f64,
    pub bler: f64,
    pub config_hash: String,
    pub far: f64,
    pub der_lo: f64,
    pub der_hi: f64,
    pub ber_lo: f64,
    pub ber_hi: f64,
    pub bler_lo: f64,
    pub bler_hi: f64,
    pub far_lo: f64,
    pub far_hi: f64,
    pub n: usize,
    pub l_iedd: usize,
}

/// Result of one message trial.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Missed,
    SyncError,
    /// Bit errors after each IEDD round; empty when only detection was scored.
    Synced(Vec<u32>),
}

/// Monte-Carlo settings for one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub snr_db: Vec<f64>,
    /// Message windows per point (upper bound when the stopping rule is active).
    pub trials: usize,
    pub none_trials: usize,
    /// Stop a point once this many final-round block errors are seen.
    pub max_block_errors: Option<u64>,
    pub seed: u64,
}

/// Info bits and channel of message trial `index`; the noise variance is left at 1.
pub fn draw_trial(
    model: &ChannelModel,
    k: usize,
    seed: u64,
    index: u64,
) -> (Vec<u8>, crate::chansim::ChannelRealization) {
    let mut rng = trial_rng(seed, STREAM_MESSAGE, index);
    let info = (0..k).map(|_| rng.random_range(0..2u8)).collect();
    let real = model.draw_realization(&mut rng, 1.0);
    (info, real)
}

fn message_trial(
    rx: &Receiver,
    model: &ChannelModel,
    sigma2: f64,
    seed: u64,
    index: u64,
    decode: bool,
    scratch: &mut RxScratch,
) -> Result<TrialOutcome> {
    let (info, real) = draw_trial(model, rx.tx().k(), seed, index);
    let real = real.with_noise_var(sigma2);
    let frame = rx.tx().build_frame(&info)?;
    let window = model.propagate(&frame.symbols, &real)?;
    if !decode {
        let (tau, m) = rx.detector().peak(&window.samples)?;
        return Ok(if m < rx.eta() || m <= 0.0 {
            TrialOutcome::Missed
        } else if tau.abs_diff(real.tau_off) > CHANNEL_MEMORY {
            TrialOutcome::SyncError
        } else {
            TrialOutcome::Synced(Vec::new())
        });
    }
    let out = rx.process(&window, scratch)?;
    let tau = match out.tau_hat {
        None => return Ok(TrialOutcome::Missed),
        Some(t) => t,
    };
    if tau.abs_diff(real.tau_off) > CHANNEL_MEMORY {
        return Ok(TrialOutcome::SyncError);
    }
    Ok(TrialOutcome::Synced(
        out.rounds
            .iter()
            .map(|r| r.iter().zip(&info).filter(|(a, b)| a != b).count() as u32)
            .collect(),
    ))
}

fn none_trials(rx: &Receiver, model: &ChannelModel, sigma2: f64, seed: u64, count: usize) -> Result<u64> {
    let hits: Result<Vec<bool>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let s = trial_rng(seed, STREAM_NONE, i).next_u64();
            let w = model.none_window(sigma2, s);
            let (_, m) = rx.detector().peak(&w.samples)?;
            Ok(m >= rx.eta() && m > 0.0)
        })
        .collect();
    Ok(hits?.into_iter().filter(|&h| h).count() as u64)
}

/// Outcomes of message trials `range` at one SNR, in trial order.
pub fn trial_outcomes(
    rx: &Receiver,
    model: &ChannelModel,
    snr_db: f64,
    seed: u64,
    range: std::ops::Range<u64>,
    decode: bool,
) -> Result<Vec<TrialOutcome>> {
    let sigma2 = snr_to_noise_var(snr_db);
    range
        .into_par_iter()
        .map_init(RxScratch::default, |scratch, i| {
            message_trial(rx, model, sigma2, seed, i, decode, scratch)
        })
        .collect()
}

/// Runs one SNR point. With `decode = false` only detection is scored.
pub fn run_point(
    rx: &Receiver,
    model: &ChannelModel,
    snr_db: f64,
    spec: &SweepSpec,
    decode: bool,
) -> Result<PointStats> {
    let sigma2 = snr_to_noise_var(snr_db);
    let rounds = if decode { rx.config().l_iedd } else { 0 };
    let mut stats = PointStats::empty(snr_db, rx.tx().n(), rx.tx().k(), rounds);
    let mut start = 0;
    while start < spec.trials {
        let end = (start + CHUNK).min(spec.trials);
        for o in trial_outcomes(rx, model, snr_db, spec.seed, start as u64..end as u64, decode)? {
            stats.add(&o);
        }
        start = end;
        if let (Some(limit), Some(&errs)) = (spec.max_block_errors, stats.block_errors.last()) {
            if errs >= limit {
                break;
            }
        }
    }
    stats.none_trials = spec.none_trials as u64;
    stats.false_alarms = none_trials(rx, model, sigma2, spec.seed, spec.none_trials)?;
    Ok(stats)
}

/// Detection error rate over an SNR list.
pub fn der_sweep(rx: &Receiver, model: &ChannelModel, spec: &SweepSpec) -> Result<Vec<PointStats>> {
    spec.snr_db.iter().map(|&s| run_point(rx, model, s, spec, false)).collect()
}

/// Full receive chain over an SNR list.
pub fn error_rate_sweep(rx: &Receiver, model: &ChannelModel, spec: &SweepSpec) -> Result<Vec<PointStats>> {
    spec.snr_db.iter().map(|&s| run_point(rx, model, s, spec, true)).collect()
}

/// SNR at which `curve` (pairs of SNR and rate, SNR ascending) first drops to `level`,
/// interpolating linearly in the log of the rate.
pub fn crossing_snr(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    let lv = level.ln();
    for w in curve.windows(2) {
        let (s0, r0) = w[0];
        let (s1, r1) = w[1];
        if r0 >= level && r1 < level {
            if r1 <= 0.0 {
                return Some(s1);
            }
            let (l0, l1) = (r0.ln(), r1.ln());
            return Some(s0 + (s1 - s0) * (l0 - lv) / (l0 - l1));
        }
    }
    None
}

/// Writes records as CSV with `#` header lines.
pub fn write_csv(path: &Path, header: &[String], records: &[MetricRecord]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for h in header {
        writeln!(file, "# {h}").map_err(|e| Error::io(path, e))?;
    }
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(r).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes records as JSON lines with `#` header lines.
pub fn write_jsonl(path: &Path, header: &[String], records: &[MetricRecord]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for h in header {
        writeln!(file, "# {h}").map_err(|e| Error::io(path, e))?;
    }
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    file.flush().map_err(|e| Error::io(path, e))
}

/// Band-limited interpolation by zero padding the spectrum. For even lengths the
/// Nyquist bin is split evenly between the positive and negative halves, so the
/// original samples are reproduced at every `factor`-th output.
pub fn oversample(x: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = x.len();
    if factor <= 1 || n == 0 {
        return x.to_vec();
    }
    let m = n * factor;
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = x.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut up = vec![Complex64::default(); m];
    let half = n / 2;
    if n % 2 == 0 {
        up[..half].copy_from_slice(&spec[..half]);
        up[m - half + 1..].copy_from_slice(&spec[half + 1..]);
        up[half] = spec[half] * 0.5;
        up[m - half] = spec[half] * 0.5;
    } else {
        up[..=half].copy_from_slice(&spec[..=half]);
        up[m - half..].copy_from_slice(&spec[half + 1..]);
    }
    planner.plan_fft_inverse(m).process(&mut up);
    let scale = 1.0 / n as f64;
    up.iter_mut().for_each(|v| *v *= scale);
    up
}

/// Peak-to-average power ratio in dB of a frame after `factor`-fold sinc interpolation.
/// The peak is taken over the interpolated signal, the average over the frame symbols.
pub fn papr_db(x: &[Complex64], factor: usize) -> Result<f64> {
    if factor == 0 {
        return Err(Error::invalid("oversample", "factor must be at least 1"));
    }
    if x.is_empty() {
        return Err(Error::invalid("frame", "empty frame"));
    }
    let y = oversample(x, factor);
    let peak = y.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let mean = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    if mean <= 0.0 {
        return Err(Error::invalid("frame", "frame has no energy"));
    }
    Ok(10.0 * (peak / mean).log10())
}

/// Empirical CCDF of the PAPR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaprCurve {
    pub papr_db: Vec<f64>,
    /// `P(PAPR > papr_db[i])`
    pub ccdf: Vec<f64>,
    pub oversample: usize,
}

/// PAPR CCDF on `grid` (dB) over `frames`.
pub fn papr_ccdf(frames: &[Vec<Complex64>], oversample: usize, grid: &[f64]) -> Result<PaprCurve> {
    if oversample < 2 {
        return Err(Error::invalid("oversample", format!("{oversample} is below 2")));
    }
    if frames.len() < MIN_PAPR_FRAMES {
        return Err(Error::invalid(
            "frames",
            format!("{} frames, at least {MIN_PAPR_FRAMES} needed", frames.len()),
        ));
    }
    let values: Result<Vec<f64>> = frames.par_iter().map(|f| papr_db(f, oversample)).collect();
    let mut values = values?;
    values.sort_by(f64::total_cmp);
    let total = values.len() as f64;
    let ccdf = grid
        .iter()
        .map(|&g| {
            let at_or_below = values.partition_point(|&v| v <= g);
            (values.len() - at_or_below) as f64 / total
        })
        .collect();
    Ok(PaprCurve {
        papr_db: grid.to_vec(),
        ccdf,
        oversample,
    })
}

/// Writes a PAPR curve as CSV with `#` header lines.
pub fn write_papr_csv(path: &Path, header: &[String], curve: &PaprCurve) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    for h in header {
        writeln!(file, "# {h}").map_err(io)?;
    }
    writeln!(file, "papr_db,ccdf,oversample").map_err(io)?;
    for (x, c) in curve.papr_db.iter().zip(&curve.ccdf) {
        writeln!(file, "{x},{c},{}", curve.oversample).map_err(io)?;
    }
    file.flush().map_err(io)
}
