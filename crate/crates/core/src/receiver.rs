//! Baseline receiver: detection, snippet extraction and iterative equalization and
//! decoding (IEDD).
//!
//! Each round runs the BCJR equalizer with the decoder's extrinsic LLRs as weighted
//! a-priori input, removes that weighted prior from the equalizer output, and hands
//! the result to the BP decoder. The first round has no prior. The loop ends after
//! `l_iedd` rounds or as soon as the decoder reports a valid codeword.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chansim::{ChannelModel, RxWindow, CHANNEL_MEMORY};
use crate::detector::{Decision, Detector, DetectorConfig, EST_TAPS};
use crate::equalizer::{build_trellis, BcjrMode, Equalizer, TrellisLayout};
use crate::error::{Error, Result};
use crate::frame::BaselineTx;
use crate::ldpc::{BpConfig, BpDecoder, DampingMode};

/// Lower bound on the noise variance handed to the equalizer, so noiseless windows
/// keep finite metrics.
pub const NOISE_VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    #[default]
    Estimated,
    /// True effective channel and offset; simulation only.
    Genie,
}

impl std::str::FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(CsiMode::Estimated),
            "genie" => Ok(CsiMode::Genie),
            _ => Err(Error::invalid("csi_mode", format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for CsiMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CsiMode::Estimated => "estimated",
            CsiMode::Genie => "genie",
        })
    }
}

/// Source of the noise variance used in the branch metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseVarMode {
    /// Residual of the channel estimate (or the true value under genie CSI).
    #[default]
    Estimated,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub l_iedd: usize,
    pub l_bp: usize,
    pub damping: f64,
    pub damping_mode: DampingMode,
    pub apriori_weight: f64,
    pub csi_mode: CsiMode,
    pub bcjr_mode: BcjrMode,
    pub noise_var: NoiseVarMode,
    pub detector: DetectorConfig,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            l_iedd: 4,
            l_bp: 10,
            damping: 0.7,
            damping_mode: DampingMode::WeightNew,
            apriori_weight: 0.2,
            csi_mode: CsiMode::Estimated,
            bcjr_mode: BcjrMode::MaxLog,
            noise_var: NoiseVarMode::Estimated,
            detector: DetectorConfig::default(),
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_iedd == 0 {
            return Err(Error::invalid("l_iedd", "at least one round is required"));
        }
        if self.l_bp == 0 {
            return Err(Error::invalid("l_bp", "at least one BP iteration is required"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", format!("{} outside (0, 1]", self.damping)));
        }
        if !(self.apriori_weight >= 0.0 && self.apriori_weight.is_finite()) {
            return Err(Error::invalid("apriori_weight", format!("{} is negative", self.apriori_weight)));
        }
        if let NoiseVarMode::Fixed(v) = self.noise_var {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("noise_var", format!("{v} is not positive")));
            }
        }
        Ok(())
    }

    fn bp(&self) -> BpConfig {
        BpConfig {
            iterations: self.l_bp,
            damping: self.damping,
            damping_mode: self.damping_mode,
            early_stop: true,
        }
    }
}

/// Result of receiving one window.
#[derive(Debug, Clone, PartialEq)]
pub struct RxOutput {
    pub detected: bool,
    pub tau_hat: Option<usize>,
    /// Info-bit decisions after each of the `l_iedd` rounds. Rounds skipped after an
    /// early stop repeat the final decision.
    pub rounds: Vec<Vec<u8>>,
    pub parity_ok: bool,
}

impl RxOutput {
    /// Final decisions, if a message was detected.
    pub fn info(&self) -> Option<&[u8]> {
        self.rounds.last().map(|v| v.as_slice())
    }

    fn missed() -> Self {
        RxOutput {
            detected: false,
            tau_hat: None,
            rounds: Vec::new(),
            parity_ok: false,
        }
    }
}

/// Receiver for one frame layout and detection threshold.
#[derive(Debug, Clone)]
pub struct Receiver {
    tx: BaselineTx,
    detector: Detector,
    model: ChannelModel,
    eta: f64,
    cfg: ReceiverConfig,
}

/// Per-thread scratch state.
#[derive(Debug, Default)]
pub struct RxScratch {
    eq: Equalizer,
}

impl Receiver {
    pub fn new(tx: BaselineTx, model: ChannelModel, eta: f64, cfg: ReceiverConfig) -> Result<Self> {
        cfg.validate()?;
        if model.n != tx.n() {
            return Err(Error::invalid(
                "n",
                format!("channel built for {} symbols, frame has {}", model.n, tx.n()),
            ));
        }
        let detector = Detector::new(tx.preamble(), tx.n(), cfg.detector)?;
        Ok(Receiver {
            tx,
            detector,
            model,
            eta,
            cfg,
        })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.cfg
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn tx(&self) -> &BaselineTx {
        &self.tx
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Dispatches on the configured CSI mode.
    pub fn process(&self, window: &RxWindow, scratch: &mut RxScratch) -> Result<RxOutput> {
        match self.cfg.csi_mode {
            CsiMode::Estimated => self.receive(window, scratch),
            CsiMode::Genie => self.receive_full_csi(window, scratch),
        }
    }

    /// Detection, channel estimation and IEDD.
    pub fn receive(&self, window: &RxWindow, scratch: &mut RxScratch) -> Result<RxOutput> {
        let out = self.detector.detect(&window.samples, self.eta)?;
        let (tau, est) = match (out.decision, out.channel_est) {
            (Decision::MessageAt(t), Some(e)) => (t, e),
            _ => return Ok(RxOutput::missed()),
        };
        let noise_var = match self.cfg.noise_var {
            NoiseVarMode::Estimated => est.noise_var,
            NoiseVarMode::Fixed(v) => v,
        };
        self.decode_at(&window.samples, tau, &est.taps, noise_var, scratch)
    }

    /// IEDD with the true effective channel at delays `0..=n_M` and the true offset.
    /// Response energy outside those delays is counted as noise.
    pub fn receive_full_csi(&self, window: &RxWindow, scratch: &mut RxScratch) -> Result<RxOutput> {
        let real = window
            .realization()
            .ok_or(Error::MissingTruth("full-CSI reception needs the channel realization"))?;
        let eff = self.model.effective_response(real)?;
        let taps: Vec<Complex64> = eff.window(0, EST_TAPS).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let noise_var = match self.cfg.noise_var {
            NoiseVarMode::Estimated => real.sigma2 + eff.energy_outside(0, EST_TAPS),
            NoiseVarMode::Fixed(v) => v,
        };
        self.decode_at(&window.samples, real.tau_off, &taps, noise_var, scratch)
    }

    /// IEDD on the payload of a message starting at window offset `tau`.
    pub fn decode_at(
        &self,
        samples: &[Complex64],
        tau: usize,
        taps: &[Complex64],
        noise_var: f64,
        scratch: &mut RxScratch,
    ) -> Result<RxOutput> {
        let p = self.tx.preamble().len();
        let payload = self.tx.payload_len();
        let start = tau + p;
        let end = start + payload + CHANNEL_MEMORY;
        if end > samples.len() {
            return Err(Error::invalid("tau", format!("snippet {start}..{end} exceeds the window")));
        }
        let layout = TrellisLayout {
            prefix: self.tx.preamble().to_vec(),
            payload_len: payload,
            tail_len: CHANNEL_MEMORY,
        };
        let trellis = build_trellis(taps, &layout)?;
        let obs = &samples[start..end];
        let nv = noise_var.max(NOISE_VAR_FLOOR);
        let w = self.cfg.apriori_weight;
        let bp_cfg = self.cfg.bp();
        let code = self.tx.code();
        let mut decoder = BpDecoder::new(code);

        let mut apriori = vec![0.0; 2 * payload];
        let mut rounds = Vec::with_capacity(self.cfg.l_iedd);
        let mut parity_ok = false;
        for round in 0..self.cfg.l_iedd {
            let prior: &[f64] = if round == 0 { &[] } else { &apriori };
            let post = scratch.eq.run(&trellis, obs, prior, w, nv, self.cfg.bcjr_mode)?;
            let eq_ext: Vec<f64> = post.iter().zip(&apriori).map(|(l, a)| l - w * a).collect();
            let dec = decoder.decode(&eq_ext, &bp_cfg)?;
            rounds.push(dec.info);
            parity_ok = dec.parity_ok;
            if parity_ok {
                break;
            }
            apriori = dec.extrinsic;
        }
        while rounds.len() < self.cfg.l_iedd {
            let last = rounds.last().expect("at least one round").clone();
            rounds.push(last);
        }
        Ok(RxOutput {
            detected: true,
            tau_hat: Some(tau),
            rounds,
            parity_ok,
        })
    }
}
