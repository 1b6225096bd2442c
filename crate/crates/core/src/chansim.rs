//! Random-access multipath channel.
//!
//! A frame of `n` symbols is dropped at a random offset into a zero-padded
//! buffer of `2n - n_M` symbols, convolved with a random five-tap Proakis
//! type C impulse response, convolved with a 16-tap raised-cosine filter that
//! carries a random fractional timing offset, and finally corrupted by
//! circularly-symmetric complex Gaussian noise. The observation window always
//! has `2n` samples.

use std::f64::consts::PI;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Proakis type C tap weights.
pub const PROAKIS_C: [f64; 5] = [0.227, 0.46, 0.688, 0.46, 0.227];
/// Number of multipath taps drawn per realization.
pub const N_TAPS: usize = PROAKIS_C.len();
/// Total channel memory in symbols: `n_taps - 1` plus one tap from the timing offset filter.
pub const CHANNEL_MEMORY: usize = N_TAPS - 1 + 1;
/// Length of the sampled timing-offset filter.
pub const STO_FILTER_LEN: usize = 16;
/// Index of the `t = 0` sample inside the timing-offset filter.
pub const STO_MAIN_TAP: usize = 8;
/// Samples dropped from the head of the filter convolution. The main tap lands one
/// symbol later than the multipath response.
const STO_TRIM: usize = STO_MAIN_TAP - 1;
/// Default raised-cosine roll-off.
pub const DEFAULT_ROLLOFF: f64 = 0.3;

/// Unnormalized sinc, `sin(x) / x`. The pulse formula passes arguments of the form
/// `pi * t / T`, so this is the convention that matches it.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Converts an SNR in dB to the total complex noise variance per sample, assuming unit
/// average transmit symbol energy.
pub fn snr_to_noise_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Shape of the pulse used to sample the timing-offset filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StoPulse {
    /// Three-case pulse evaluated exactly as printed in the channel model:
    /// `1` at `t = 0`, `pi/4 sinc(pi / 2beta)` at `|t| = T / 2beta` and
    /// `cos(beta t / T) / (pi t / T) * sinc(pi t / T)` elsewhere.
    #[default]
    AsPrinted,
    /// Textbook raised-cosine impulse response
    /// `sinc(pi t / T) cos(pi beta t / T) / (1 - (2 beta t / T)^2)`.
    RaisedCosine,
}

impl std::str::FromStr for StoPulse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(StoPulse::AsPrinted),
            "raised-cosine" => Ok(StoPulse::RaisedCosine),
            other => Err(Error::invalid("pulse", format!("unknown pulse shape {other:?}"))),
        }
    }
}

impl std::fmt::Display for StoPulse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StoPulse::AsPrinted => "as-printed",
            StoPulse::RaisedCosine => "raised-cosine",
        })
    }
}

/// Evaluates the timing-offset pulse at `t` (in symbol periods, `T = 1`).
pub fn pulse(t: f64, beta: f64, shape: StoPulse) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let edge = 1.0 / (2.0 * beta);
    if (t.abs() - edge).abs() < 1e-12 {
        return PI / 4.0 * sinc(PI / (2.0 * beta));
    }
    match shape {
        StoPulse::AsPrinted => (beta * t).cos() / (PI * t) * sinc(PI * t),
        StoPulse::RaisedCosine => {
            sinc(PI * t) * (PI * beta * t).cos() / (1.0 - (2.0 * beta * t).powi(2))
        }
    }
}

/// 16-tap filter sampled from `g(t + tau_sto)` at `t = -8, ..., 7`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoFilter {
    pub beta: f64,
    pub tau_sto: f64,
    pub taps: [f64; STO_FILTER_LEN],
}

/// Samples the timing-offset filter.
pub fn sto_filter(tau_sto: f64, beta: f64, shape: StoPulse) -> Result<StoFilter> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid("beta", format!("roll-off must lie in (0, 1], got {beta}")));
    }
    if !(0.0..1.0).contains(&tau_sto) {
        return Err(Error::invalid("tau_sto", format!("must lie in [0, 1), got {tau_sto}")));
    }
    let mut taps = [0.0; STO_FILTER_LEN];
    for (j, tap) in taps.iter_mut().enumerate() {
        let t = j as f64 - STO_MAIN_TAP as f64;
        *tap = pulse(t + tau_sto, beta, shape);
    }
    Ok(StoFilter { beta, tau_sto, taps })
}

/// One draw of the channel state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<f64>,
    pub tau_off: usize,
    pub tau_sto: f64,
    pub sigma2: f64,
    /// Seed of the unit-variance noise sequence; the noise is scaled by `sqrt(sigma2)`.
    pub seed: u64,
}

impl ChannelRealization {
    /// Same channel and noise sequence at a different noise variance.
    pub fn with_noise_var(&self, sigma2: f64) -> Self {
        ChannelRealization {
            sigma2,
            ..self.clone()
        }
    }
}

/// Ground-truth label attached to a received window.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Message(ChannelRealization),
    NoneMessage { sigma2: f64 },
}

/// Received observation window of `2n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RxWindow {
    pub samples: Vec<Complex64>,
    pub truth: Option<Truth>,
}

impl RxWindow {
    pub fn has_message(&self) -> Option<bool> {
        self.truth.as_ref().map(|t| matches!(t, Truth::Message(_)))
    }

    pub fn tau_off(&self) -> Option<usize> {
        match &self.truth {
            Some(Truth::Message(r)) => Some(r.tau_off),
            _ => None,
        }
    }

    pub fn realization(&self) -> Option<&ChannelRealization> {
        match &self.truth {
            Some(Truth::Message(r)) => Some(r),
            _ => None,
        }
    }
}

/// Composite impulse response of multipath taps and timing-offset filter, real-valued,
/// indexed by delay relative to the frame start.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveResponse {
    pub first_delay: isize,
    pub taps: Vec<f64>,
}

impl EffectiveResponse {
    /// Response value at integer delay `d` (zero outside the support).
    pub fn at(&self, d: isize) -> f64 {
        let idx = d - self.first_delay;
        if idx < 0 {
            return 0.0;
        }
        self.taps.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// Taps at delays `start..start + len`.
    pub fn window(&self, start: isize, len: usize) -> Vec<f64> {
        (0..len as isize).map(|d| self.at(start + d)).collect()
    }

    /// Energy outside delays `start..start + len`.
    pub fn energy_outside(&self, start: isize, len: usize) -> f64 {
        let total: f64 = self.taps.iter().map(|t| t * t).sum();
        let inside: f64 = self.window(start, len).iter().map(|t| t * t).sum();
        (total - inside).max(0.0)
    }
}

/// Channel model for frames of `n` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub n: usize,
    pub beta: f64,
    pub pulse: StoPulse,
}

impl ChannelModel {
    pub fn new(n: usize, beta: f64, pulse: StoPulse) -> Result<Self> {
        if n <= CHANNEL_MEMORY {
            return Err(Error::invalid("n", format!("frame length {n} must exceed the channel memory")));
        }
        // validates beta
        sto_filter(0.0, beta, pulse)?;
        Ok(ChannelModel { n, beta, pulse })
    }

    /// Observation window length `n_det = 2n`.
    pub fn window_len(&self) -> usize {
        2 * self.n
    }

    /// Number of admissible message offsets, `n - n_M`.
    pub fn offset_count(&self) -> usize {
        self.n - CHANNEL_MEMORY
    }

    /// Draws `h_i = w_i t_i` with `t_i ~ N(0, 1)`.
    pub fn draw_taps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut t = [0.0; N_TAPS];
        for v in t.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        proakis_taps(&t)
    }

    pub fn draw_realization<R: Rng + ?Sized>(&self, rng: &mut R, sigma2: f64) -> ChannelRealization {
        let taps = self.draw_taps(rng);
        let tau_off = rng.random_range(0..self.offset_count());
        let tau_sto = rng.random::<f64>();
        let seed = rng.random::<u64>();
        ChannelRealization {
            taps,
            tau_off,
            tau_sto,
            sigma2,
            seed,
        }
    }

    pub fn sto_filter(&self, tau_sto: f64) -> Result<StoFilter> {
        sto_filter(tau_sto, self.beta, self.pulse)
    }

    /// Multipath taps convolved with the timing-offset filter, aligned the same way as
    /// [`ChannelModel::propagate`].
    pub fn effective_response(&self, real: &ChannelRealization) -> Result<EffectiveResponse> {
        let g = self.sto_filter(real.tau_sto)?;
        let mut taps = vec![0.0; real.taps.len() + STO_FILTER_LEN - 1];
        for (i, h) in real.taps.iter().enumerate() {
            for (j, gj) in g.taps.iter().enumerate() {
                taps[i + j] += h * gj;
            }
        }
        Ok(EffectiveResponse {
            first_delay: -(STO_TRIM as isize),
            taps,
        })
    }

    /// Noise-free channel output of length `2n`.
    pub fn apply(&self, x: &[Complex64], real: &ChannelRealization) -> Result<Vec<Complex64>> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::Length {
                what: "frame",
                expected: n,
                got: x.len(),
            });
        }
        if real.taps.len() != N_TAPS {
            return Err(Error::Length {
                what: "channel taps",
                expected: N_TAPS,
                got: real.taps.len(),
            });
        }
        if real.tau_off >= self.offset_count() {
            return Err(Error::invalid(
                "tau_off",
                format!("{} outside [0, {})", real.tau_off, self.offset_count()),
            ));
        }
        let g = self.sto_filter(real.tau_sto)?;

        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n - CHANNEL_MEMORY];
        buf[real.tau_off..real.tau_off + n].copy_from_slice(x);
        let y_h = convolve(&buf, &real.taps);
        debug_assert_eq!(y_h.len(), 2 * n - 1);
        let y_g = convolve(&y_h, &g.taps);
        Ok(y_g[STO_TRIM..STO_TRIM + 2 * n].to_vec())
    }

    /// Passes a frame through the channel and adds noise derived from `real.seed`.
    pub fn propagate(&self, x: &[Complex64], real: &ChannelRealization) -> Result<RxWindow> {
        let mut samples = self.apply(x, real)?;
        let noise = unit_noise(real.seed, samples.len());
        let scale = real.sigma2.sqrt();
        for (s, w) in samples.iter_mut().zip(&noise) {
            *s += w * scale;
        }
        Ok(RxWindow {
            samples,
            truth: Some(Truth::Message(real.clone())),
        })
    }

    /// Window without any transmitted message.
    pub fn none_window(&self, sigma2: f64, seed: u64) -> RxWindow {
        let scale = sigma2.max(0.0).sqrt();
        let samples = unit_noise(seed, self.window_len())
            .into_iter()
            .map(|w| w * scale)
            .collect();
        RxWindow {
            samples,
            truth: Some(Truth::NoneMessage { sigma2 }),
        }
    }
}

/// Scales standard-normal draws by the Proakis weights.
pub fn proakis_taps(t: &[f64; N_TAPS]) -> Vec<f64> {
    PROAKIS_C.iter().zip(t).map(|(w, t)| w * t).collect()
}

/// Full linear convolution of a complex sequence with real taps.
fn convolve(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (i, xi) in x.iter().enumerate() {
        if xi.re == 0.0 && xi.im == 0.0 {
            continue;
        }
        for (j, hj) in h.iter().enumerate() {
            y[i + j] += xi * hj;
        }
    }
    y
}

/// Circularly-symmetric complex Gaussian samples of unit total variance.
pub fn unit_noise(seed: u64, len: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// One line of a golden-vector file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub seed: u64,
    pub taps: Vec<f64>,
    pub tau_off: usize,
    pub tau_sto: f64,
    pub sigma2: f64,
    pub beta: f64,
    pub pulse: StoPulse,
    pub noise_seed: u64,
    pub x: Vec<[f64; 2]>,
    pub noise: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
}

impl GoldenRecord {
    /// Builds the record derived from `seed`: a random unit-energy QPSK frame, a channel
    /// realization and an SNR drawn uniformly from 0..20 dB.
    pub fn generate(model: &ChannelModel, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x: Vec<Complex64> = (0..model.n)
            .map(|_| {
                let b: u8 = rng.random_range(0..4);
                Complex64::new(
                    if b & 2 == 0 { s } else { -s },
                    if b & 1 == 0 { s } else { -s },
                )
            })
            .collect();
        let snr_db = rng.random_range(0.0..20.0);
        let real = model.draw_realization(&mut rng, snr_to_noise_var(snr_db));
        let window = model.propagate(&x, &real)?;
        let scale = real.sigma2.sqrt();
        let noise = unit_noise(real.seed, window.samples.len())
            .into_iter()
            .map(|w| w * scale)
            .collect::<Vec<_>>();
        Ok(GoldenRecord {
            seed,
            taps: real.taps,
            tau_off: real.tau_off,
            tau_sto: real.tau_sto,
            sigma2: real.sigma2,
            beta: model.beta,
            pulse: model.pulse,
            noise_seed: real.seed,
            x: to_pairs(&x),
            noise: to_pairs(&noise),
            y: to_pairs(&window.samples),
        })
    }

    pub fn realization(&self) -> ChannelRealization {
        ChannelRealization {
            taps: self.taps.clone(),
            tau_off: self.tau_off,
            tau_sto: self.tau_sto,
            sigma2: self.sigma2,
            seed: self.noise_seed,
        }
    }
}

pub fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Per-record seed for golden export.
pub fn golden_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.random()
}

/// Writes `count` golden records as JSON lines.
pub fn export_golden(model: &ChannelModel, path: &Path, count: usize, seed: u64) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for i in 0..count {
        let rec = GoldenRecord::generate(model, golden_seed(seed, i as u64))?;
        let line = serde_json::to_string(&rec).expect("golden record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads golden records back.
pub fn read_golden(path: &Path) -> Result<Vec<GoldenRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> ChannelModel {
        ChannelModel::new(64, DEFAULT_ROLLOFF, StoPulse::AsPrinted).unwrap()
    }

    #[test]
    fn snr_conversion() {
        assert_relative_eq!(snr_to_noise_var(0.0), 1.0);
        assert_relative_eq!(snr_to_noise_var(10.0), 0.1, epsilon = 1e-15);
        assert_relative_eq!(snr_to_noise_var(18.0), 0.015848931924611134, epsilon = 1e-12);
    }

    #[test]
    fn taps_scale_with_proakis_weights() {
        assert_eq!(proakis_taps(&[1.0; 5]), vec![0.227, 0.46, 0.688, 0.46, 0.227]);
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 100_000;
        let mut sum = [0.0; 5];
        let mut sq = [0.0; 5];
        for _ in 0..draws {
            let h = m.draw_taps(&mut rng);
            for i in 0..5 {
                sum[i] += h[i];
                sq[i] += h[i] * h[i];
            }
        }
        for i in 0..5 {
            let mean = sum[i] / draws as f64;
            let var = sq[i] / draws as f64 - mean * mean;
            assert!(mean.abs() < 0.01, "tap {i} mean {mean}");
            let sd = var.sqrt();
            assert!((sd / PROAKIS_C[i] - 1.0).abs() < 0.02, "tap {i} sd {sd}");
        }
        let var_center = sq[2] / draws as f64;
        assert!((var_center / 0.688f64.powi(2) - 1.0).abs() < 0.02);
    }

    #[test]
    fn pulse_cases() {
        assert_eq!(pulse(0.0, 0.3, StoPulse::AsPrinted), 1.0);
        let edge = pulse(2.0, 0.25, StoPulse::AsPrinted);
        assert_relative_eq!(edge, PI / 4.0 * sinc(2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(pulse(-2.0, 0.25, StoPulse::AsPrinted), edge);
        // textbook pulse is continuous at the edge
        let rc = |t| pulse(t, 0.25, StoPulse::RaisedCosine);
        assert_relative_eq!(rc(2.0 - 1e-7), rc(2.0), epsilon = 1e-6);
        // printed middle case away from the special points
        let t = 0.5;
        let expected = (0.3f64 * t).cos() / (PI * t) * ((PI * t).sin() / (PI * t));
        assert_relative_eq!(pulse(t, 0.3, StoPulse::AsPrinted), expected, epsilon = 1e-15);
    }

    #[test]
    fn sto_filter_shape() {
        for shape in [StoPulse::AsPrinted, StoPulse::RaisedCosine] {
            for beta in [0.1, 0.25, 0.3, 0.5, 1.0] {
                let g = sto_filter(0.0, beta, shape).unwrap();
                assert_eq!(g.taps.len(), 16);
                assert_eq!(g.taps[STO_MAIN_TAP], 1.0);
                for k in 1..8 {
                    assert_relative_eq!(
                        g.taps[STO_MAIN_TAP - k],
                        g.taps[STO_MAIN_TAP + k],
                        epsilon = 1e-15
                    );
                }
            }
        }
        assert!(sto_filter(0.0, 0.0, StoPulse::AsPrinted).is_err());
        assert!(sto_filter(0.0, -0.5, StoPulse::AsPrinted).is_err());
        assert!(sto_filter(1.0, 0.3, StoPulse::AsPrinted).is_err());
    }

    fn ramp(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect()
    }

    #[test]
    fn identity_channel_shifts_by_one() {
        let m = model();
        let x = ramp(64);
        let real = ChannelRealization {
            taps: vec![1.0, 0.0, 0.0, 0.0, 0.0],
            tau_off: 0,
            tau_sto: 0.0,
            sigma2: 0.0,
            seed: 3,
        };
        let y = m.propagate(&x, &real).unwrap().samples;
        assert_eq!(y.len(), 128);
        assert!(y[0].norm() < 1e-12);
        for i in 0..64 {
            assert!((y[i + 1] - x[i]).norm() < 1e-12);
        }
        for v in &y[65..] {
            assert!(v.norm() < 1e-12);
        }
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ey: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(ex, ey, epsilon = 1e-9);
    }

    #[test]
    fn effective_response_matches_propagation() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = ramp(64);
        let real = m.draw_realization(&mut rng, 0.0);
        let y = m.apply(&x, &real).unwrap();
        let eff = m.effective_response(&real).unwrap();
        for (t, yt) in y.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, xi) in x.iter().enumerate() {
                let d = t as isize - (real.tau_off + i) as isize;
                acc += xi * eff.at(d);
            }
            assert!((acc - yt).norm() < 1e-9);
        }
    }

    #[test]
    fn noise_power_and_none_window() {
        let m = ChannelModel::new(50_000, DEFAULT_ROLLOFF, StoPulse::AsPrinted).unwrap();
        let x = vec![Complex64::new(0.0, 0.0); 50_000];
        let real = ChannelRealization {
            taps: vec![0.1; 5],
            tau_off: 0,
            tau_sto: 0.5,
            sigma2: 0.1,
            seed: 11,
        };
        let y = m.propagate(&x, &real).unwrap().samples;
        let p = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((p / 0.1 - 1.0).abs() < 0.03, "{p}");

        let m = model();
        let w = m.none_window(1.0, 5);
        assert_eq!(w.samples.len(), 128);
        assert_eq!(w.has_message(), Some(false));
        assert_eq!(w.tau_off(), None);
        let z = m.none_window(0.0, 5);
        assert!(z.samples.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn offsets_are_uniform() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let bins = m.offset_count();
        let mut hist = vec![0usize; bins];
        let draws = 59_000;
        for _ in 0..draws {
            hist[m.draw_realization(&mut rng, 1.0).tau_off] += 1;
        }
        let e = draws as f64 / bins as f64;
        let chi2: f64 = hist.iter().map(|&h| (h as f64 - e).powi(2) / e).sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2} p {p}");
    }

    #[test]
    fn wrong_frame_length_is_rejected() {
        let m = model();
        let real = m.draw_realization(&mut ChaCha8Rng::seed_from_u64(0), 1.0);
        assert!(matches!(
            m.propagate(&ramp(63), &real),
            Err(Error::Length { .. })
        ));
    }
}
