//! Preamble detection, synchronization and channel estimation.
//!
//! For every candidate offset `tau` the received segment `y[tau .. tau + P]` is
//! projected onto the column space of the preamble convolution matrix `A`
//! (`P x L_det`, zeros before the preamble start). The statistic
//!
//! `rho(tau) = |P_A y|^2 / |y|^2`
//!
//! is the fraction of segment energy explained by some `L_det`-tap channel driven by
//! the preamble. The denominator is the energy detector, so `rho` lies in `[0, 1]` and
//! does not depend on the received scale. With `L_det = 1` this is exactly the
//! normalized correlation `|<y, p>|^2 / (|y|^2 |p|^2)`.
//!
//! A message is declared at `argmax rho` when the maximum reaches the threshold
//! `eta`. Thresholds come from Monte-Carlo calibration over noise-only windows.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::chansim::{snr_to_noise_var, ChannelModel, CHANNEL_MEMORY};
use crate::error::{Error, Result};

/// Taps of the estimated channel, `n_M + 1`.
pub const EST_TAPS: usize = CHANNEL_MEMORY + 1;
/// Relative tolerance under which two statistics count as tied. Ties go to the later
/// offset.
const TIE_TOL: f64 = 1e-9;

/// How the channel taps are estimated once a message is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Least-squares fit through the preamble convolution matrix.
    #[default]
    LeastSquares,
    /// Raw preamble correlation divided by the preamble energy.
    MatchedFilter,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "least-squares" => Ok(Estimator::LeastSquares),
            "mf" | "matched-filter" => Ok(Estimator::MatchedFilter),
            _ => Err(Error::invalid("estimator", format!("unknown estimator {s:?}"))),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::LeastSquares => "least-squares",
            Estimator::MatchedFilter => "matched-filter",
        })
    }
}

/// Estimated channel at the detected offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// `taps[l]` acts on the symbol `l` positions earlier.
    pub taps: Vec<Complex64>,
    pub noise_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    MessageAt(usize),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub decision: Decision,
    /// Maximum of the statistic over all candidate offsets.
    pub metric: f64,
    /// Present iff a message was declared.
    pub channel_est: Option<ChannelEstimate>,
}

impl DetectionOutcome {
    pub fn offset(&self) -> Option<usize> {
        match self.decision {
            Decision::MessageAt(t) => Some(t),
            Decision::None => None,
        }
    }
}

/// Least-squares projector for a `P x L` convolution matrix of the preamble.
#[derive(Debug, Clone)]
struct Projector {
    taps: usize,
    /// `A^H`, row-major `L x P`
    a_h: Vec<Complex64>,
    /// `(A^H A)^-1`, row-major `L x L`
    gram_inv: Vec<Complex64>,
}

impl Projector {
    fn new(preamble: &[Complex64], taps: usize) -> Result<Self> {
        let p = preamble.len();
        if taps == 0 || taps > p {
            return Err(Error::invalid("detector_taps", format!("{taps} taps for a {p}-symbol preamble")));
        }
        let a = DMatrix::from_fn(p, taps, |i, l| if i >= l { preamble[i - l] } else { Complex64::default() });
        let gram = a.adjoint() * &a;
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::invalid("preamble", "convolution matrix is rank deficient"))?;
        let a_h = a.adjoint();
        Ok(Projector {
            taps,
            a_h: (0..taps * p).map(|k| a_h[(k / p, k % p)]).collect(),
            gram_inv: (0..taps * taps).map(|k| inv[(k / taps, k % taps)]).collect(),
        })
    }

    /// `A^H y` into `c`.
    fn correlate(&self, seg: &[Complex64], c: &mut [Complex64]) {
        let p = seg.len();
        for (l, cl) in c.iter_mut().enumerate() {
            let row = &self.a_h[l * p..(l + 1) * p];
            *cl = row.iter().zip(seg).map(|(a, y)| a * y).sum();
        }
    }

    /// `c^H G^-1 c`, the energy of the projection.
    fn projected_energy(&self, c: &[Complex64]) -> f64 {
        let l = self.taps;
        let mut acc = 0.0;
        for i in 0..l {
            let row = &self.gram_inv[i * l..(i + 1) * l];
            let gi: Complex64 = row.iter().zip(c).map(|(g, cj)| g * cj).sum();
            acc += (c[i].conj() * gi).re;
        }
        acc.max(0.0)
    }

    /// LS taps `G^-1 c`.
    fn solve(&self, c: &[Complex64]) -> Vec<Complex64> {
        let l = self.taps;
        (0..l)
            .map(|i| self.gram_inv[i * l..(i + 1) * l].iter().zip(c).map(|(g, cj)| g * cj).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Channel length `L_det` assumed by the detection statistic.
    pub stat_taps: usize,
    pub estimator: Estimator,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            stat_taps: EST_TAPS,
            estimator: Estimator::LeastSquares,
        }
    }
}

/// Detector bound to one preamble and window geometry.
#[derive(Debug, Clone)]
pub struct Detector {
    preamble: Vec<Complex64>,
    window_len: usize,
    offsets: usize,
    cfg: DetectorConfig,
    stat: Projector,
    est: Projector,
}

impl Detector {
    /// Detector for frames of `n` symbols (windows of `2n`, offsets `0..n - n_M`).
    pub fn new(preamble: &[Complex64], n: usize, cfg: DetectorConfig) -> Result<Self> {
        if n <= CHANNEL_MEMORY || preamble.len() > n {
            return Err(Error::invalid("n", format!("{n} too short for a {}-symbol preamble", preamble.len())));
        }
        Ok(Detector {
            preamble: preamble.to_vec(),
            window_len: 2 * n,
            offsets: n - CHANNEL_MEMORY,
            cfg,
            stat: Projector::new(preamble, cfg.stat_taps)?,
            est: Projector::new(preamble, EST_TAPS)?,
        })
    }

    pub fn config(&self) -> DetectorConfig {
        self.cfg
    }

    pub fn preamble(&self) -> &[Complex64] {
        &self.preamble
    }

    /// Number of candidate offsets.
    pub fn offsets(&self) -> usize {
        self.offsets
    }

    fn check_len(&self, samples: &[Complex64]) -> Result<()> {
        if samples.len() != self.window_len {
            return Err(Error::Length {
                what: "receive window",
                expected: self.window_len,
                got: samples.len(),
            });
        }
        Ok(())
    }

    /// `rho(tau)` for every candidate offset. All-zero segments give 0.
    pub fn statistic(&self, samples: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(samples)?;
        let p = self.preamble.len();
        let mut c = vec![Complex64::default(); self.stat.taps];
        Ok((0..self.offsets)
            .map(|tau| {
                let seg = &samples[tau..tau + p];
                let energy: f64 = seg.iter().map(|v| v.norm_sqr()).sum();
                if energy <= 0.0 {
                    return 0.0;
                }
                self.stat.correlate(seg, &mut c);
                (self.stat.projected_energy(&c) / energy).min(1.0)
            })
            .collect())
    }

    /// Maximum statistic and the offset attaining it.
    pub fn peak(&self, samples: &[Complex64]) -> Result<(usize, f64)> {
        let rho = self.statistic(samples)?;
        let best = rho.iter().cloned().fold(0.0, f64::max);
        let tau = rho
            .iter()
            .rposition(|&r| r >= best - TIE_TOL * best.max(f64::MIN_POSITIVE))
            .unwrap_or(0);
        Ok((tau, best))
    }

    /// Detection with threshold `eta`; a message is declared when `max rho >= eta`.
    pub fn detect(&self, samples: &[Complex64], eta: f64) -> Result<DetectionOutcome> {
        if samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("receive window"));
        }
        let (tau, metric) = self.peak(samples)?;
        // a window without energy never carries a message
        if metric >= eta && metric > 0.0 {
            Ok(DetectionOutcome {
                decision: Decision::MessageAt(tau),
                metric,
                channel_est: Some(self.estimate_channel(samples, tau)?),
            })
        } else {
            Ok(DetectionOutcome {
                decision: Decision::None,
                metric,
                channel_est: None,
            })
        }
    }

    /// Six-tap channel estimate from the preamble span starting at `tau`. The noise
    /// variance is the residual energy divided by the residual degrees of freedom.
    pub fn estimate_channel(&self, samples: &[Complex64], tau: usize) -> Result<ChannelEstimate> {
        self.check_len(samples)?;
        if tau >= self.offsets {
            return Err(Error::invalid("tau", format!("{tau} outside [0, {})", self.offsets)));
        }
        let p = self.preamble.len();
        let seg = &samples[tau..tau + p];
        let mut c = vec![Complex64::default(); EST_TAPS];
        self.est.correlate(seg, &mut c);
        let taps = match self.cfg.estimator {
            Estimator::LeastSquares => self.est.solve(&c),
            Estimator::MatchedFilter => {
                let e: f64 = self.preamble.iter().map(|v| v.norm_sqr()).sum();
                c.iter().map(|v| v / e).collect()
            }
        };
        let rss: f64 = (0..p)
            .map(|i| {
                let fit: Complex64 = (0..EST_TAPS.min(i + 1)).map(|l| taps[l] * self.preamble[i - l]).sum();
                (seg[i] - fit).norm_sqr()
            })
            .sum();
        Ok(ChannelEstimate {
            taps,
            noise_var: rss / (p - EST_TAPS) as f64,
        })
    }
}

/// Persisted detection threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub eta: f64,
    pub target_far: f64,
    pub trials: usize,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

impl Calibration {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("calibration serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })
    }
}

/// One-sided 95% Clopper-Pearson upper bound on a binomial rate.
pub fn clopper_pearson_upper(successes: usize, trials: usize) -> f64 {
    if successes >= trials {
        return 1.0;
    }
    let b = Beta::new(successes as f64 + 1.0, (trials - successes) as f64).expect("valid beta parameters");
    b.inverse_cdf(0.95)
}

/// Seed of the `index`-th noise-only calibration window.
pub fn none_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ 0x6e6f_6e65);
    rng.set_stream(index);
    rng.random()
}

/// Peak statistic of `trials` noise-only windows. Noise powers are drawn uniformly
/// in dB over `snr_range`.
pub fn none_peaks(
    detector: &Detector,
    model: &ChannelModel,
    trials: usize,
    snr_range: (f64, f64),
    seed: u64,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = none_seed(seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let snr = if snr_range.1 > snr_range.0 {
                rng.random_range(snr_range.0..snr_range.1)
            } else {
                snr_range.0
            };
            let w = model.none_window(snr_to_noise_var(snr), rng.random());
            detector.peak(&w.samples).map(|(_, m)| m)
        })
        .collect()
}

/// Smallest threshold whose false-alarm rate on `peaks` stays below `target_far` with
/// 95% one-sided confidence. A target of 1 accepts everything.
pub fn threshold_from_peaks(peaks: &[f64], target_far: f64) -> Result<f64> {
    if !(target_far > 0.0 && target_far <= 1.0) {
        return Err(Error::invalid("target_far", format!("{target_far} outside (0, 1]")));
    }
    if target_far >= 1.0 {
        return Ok(0.0);
    }
    let n = peaks.len();
    if (n as f64) < 10.0 / target_far {
        return Err(Error::invalid(
            "trials",
            format!("{n} windows cannot resolve a false-alarm rate of {target_far}"),
        ));
    }
    let mut sorted = peaks.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // largest k with CP(k) <= target; exactly k peaks may sit at or above eta
    let mut k = 0;
    while k < n && clopper_pearson_upper(k + 1, n) <= target_far {
        k += 1;
    }
    if clopper_pearson_upper(k, n) > target_far {
        // not even zero alarms certify the target; reject everything observed
        return Ok(next_up(sorted[0]));
    }
    // step above the (k+1)-th largest peak and any ties with it
    let mut eta = next_up(sorted[k]);
    while sorted.iter().filter(|&&v| v >= eta).count() > k {
        eta = next_up(eta);
    }
    Ok(eta)
}

fn next_up(x: f64) -> f64 {
    if x >= 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        -f64::from_bits((-x).to_bits() - 1)
    }
}

/// Monte-Carlo threshold calibration over noise-only windows.
pub fn calibrate_threshold(
    detector: &Detector,
    model: &ChannelModel,
    target_far: f64,
    trials: usize,
    snr_range: (f64, f64),
    seed: u64,
) -> Result<Calibration> {
    if target_far < 1.0 && (trials as f64) < 10.0 / target_far {
        return Err(Error::invalid(
            "trials",
            format!("{trials} windows cannot resolve a false-alarm rate of {target_far}"),
        ));
    }
    let eta = if target_far >= 1.0 {
        threshold_from_peaks(&[], target_far)?
    } else {
        threshold_from_peaks(&none_peaks(detector, model, trials, snr_range, seed)?, target_far)?
    };
    Ok(Calibration {
        eta,
        target_far,
        trials,
        seed,
        config_hash: String::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}
