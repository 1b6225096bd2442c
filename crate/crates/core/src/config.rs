//! Run configuration and its flat `key = value` file format.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma separated. Unknown
//! or repeated keys are errors. Every field enters the configuration hash that is
//! stamped on output files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chansim::{ChannelModel, StoPulse, DEFAULT_ROLLOFF, N_TAPS};
use crate::detector::{Estimator, EST_TAPS};
use crate::error::{Error, Result};
use crate::frame::{preamble_len_for, BaselineTx, PreambleSpec, DEFAULT_ZC_ROOT};
use crate::receiver::{NoiseVarMode, ReceiverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub n_taps: usize,
    pub beta: f64,
    pub pulse: StoPulse,
    pub seed: u64,
    pub snr_list: Vec<f64>,
    pub trials: usize,
    pub none_trials: usize,
    /// 0 disables the block-error stopping rule.
    pub max_block_errors: u64,
    pub receiver: ReceiverConfig,
    pub zc_root: usize,
    /// Preamble length; `None` uses the tuned table for `n`.
    pub preamble_len: Option<usize>,
    pub target_far: f64,
    pub calibration_trials: usize,
    /// Detection threshold; `None` calibrates on the fly.
    pub eta: Option<f64>,
    pub lengths: Vec<usize>,
    pub length_snr_db: f64,
    pub oversample: usize,
    pub papr_frames: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 64,
            k: 64,
            n_taps: N_TAPS,
            beta: DEFAULT_ROLLOFF,
            pulse: StoPulse::default(),
            seed: 1,
            snr_list: (0..=9).map(|i| i as f64 * 2.0).collect(),
            trials: 20_000,
            none_trials: 100_000,
            max_block_errors: 200,
            receiver: ReceiverConfig::default(),
            zc_root: DEFAULT_ZC_ROOT,
            preamble_len: None,
            target_far: 1e-3,
            calibration_trials: 100_000,
            eta: None,
            lengths: vec![40, 48, 56, 64, 96],
            length_snr_db: 18.0,
            oversample: 16,
            papr_frames: 10_000,
            output_path: None,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn parse<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let r = &mut self.receiver;
        match key {
            "n" => self.n = parse(v)?,
            "k" => self.k = parse(v)?,
            "n_taps" => self.n_taps = parse(v)?,
            "beta" => self.beta = parse(v)?,
            "pulse" => self.pulse = v.parse().map_err(|e: Error| e.to_string())?,
            "seed" => self.seed = parse(v)?,
            "snr_db" | "snr_list" => self.snr_list = parse_list(v)?,
            "trials" => self.trials = parse(v)?,
            "none_trials" => self.none_trials = parse(v)?,
            "max_block_errors" => self.max_block_errors = parse(v)?,
            "l_iedd" => r.l_iedd = parse(v)?,
            "l_bp" => r.l_bp = parse(v)?,
            "damping" => r.damping = parse(v)?,
            "damping_mode" => r.damping_mode = v.parse().map_err(|e: Error| e.to_string())?,
            "apriori_weight" => r.apriori_weight = parse(v)?,
            "csi_mode" => r.csi_mode = v.parse().map_err(|e: Error| e.to_string())?,
            "bcjr_mode" => r.bcjr_mode = v.parse().map_err(|e: Error| e.to_string())?,
            "noise_var" => {
                r.noise_var = if v == "estimated" {
                    NoiseVarMode::Estimated
                } else {
                    NoiseVarMode::Fixed(parse(v)?)
                }
            }
            "detector_taps" => r.detector.stat_taps = parse(v)?,
            "estimator" => r.detector.estimator = v.parse::<Estimator>().map_err(|e| e.to_string())?,
            "zc_root" | "q" => self.zc_root = parse(v)?,
            "preamble_len" => {
                self.preamble_len = if v == "auto" { None } else { Some(parse(v)?) }
            }
            "target_far" => self.target_far = parse(v)?,
            "calibration_trials" => self.calibration_trials = parse(v)?,
            "eta" => self.eta = if v == "auto" { None } else { Some(parse(v)?) },
            "lengths" => self.lengths = parse_list(v)?,
            "length_snr_db" => self.length_snr_db = parse(v)?,
            "oversample" => self.oversample = parse(v)?,
            "papr_frames" => self.papr_frames = parse(v)?,
            "output_path" => self.output_path = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses a configuration file on top of the defaults.
    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("key {key:?} given twice")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    /// Flat `key = value` rendering that [`RunConfig::parse_str`] reads back.
    pub fn to_text(&self) -> String {
        let r = &self.receiver;
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut lines = vec![
            format!("n = {}", self.n),
            format!("k = {}", self.k),
            format!("n_taps = {}", self.n_taps),
            format!("beta = {}", self.beta),
            format!("pulse = {}", self.pulse),
            format!("seed = {}", self.seed),
            format!("snr_list = {}", list(&self.snr_list)),
            format!("trials = {}", self.trials),
            format!("none_trials = {}", self.none_trials),
            format!("max_block_errors = {}", self.max_block_errors),
            format!("l_iedd = {}", r.l_iedd),
            format!("l_bp = {}", r.l_bp),
            format!("damping = {}", r.damping),
            format!("damping_mode = {}", r.damping_mode),
            format!("apriori_weight = {}", r.apriori_weight),
            format!("csi_mode = {}", r.csi_mode),
            format!("bcjr_mode = {}", r.bcjr_mode),
            format!(
                "noise_var = {}",
                match r.noise_var {
                    NoiseVarMode::Estimated => "estimated".to_string(),
                    NoiseVarMode::Fixed(v) => v.to_string(),
                }
            ),
            format!("detector_taps = {}", r.detector.stat_taps),
            format!("estimator = {}", r.detector.estimator),
            format!("zc_root = {}", self.zc_root),
            format!(
                "preamble_len = {}",
                self.preamble_len.map_or("auto".to_string(), |v| v.to_string())
            ),
            format!("target_far = {}", self.target_far),
            format!("calibration_trials = {}", self.calibration_trials),
            format!("eta = {}", self.eta.map_or("auto".to_string(), |v| v.to_string())),
            format!(
                "lengths = {}",
                self.lengths.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
            ),
            format!("length_snr_db = {}", self.length_snr_db),
            format!("oversample = {}", self.oversample),
            format!("papr_frames = {}", self.papr_frames),
        ];
        if let Some(p) = &self.output_path {
            lines.push(format!("output_path = {}", p.display()));
        }
        lines.join("\n") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.k != self.n {
            return Err(Error::invalid("k", format!("k = {} must equal n = {}", self.k, self.n)));
        }
        if self.n_taps != N_TAPS {
            return Err(Error::invalid(
                "n_taps",
                format!("only {N_TAPS} multipath taps are supported (equalizer spans {EST_TAPS})"),
            ));
        }
        if self.snr_list.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("snr_list"));
        }
        if !(self.target_far > 0.0 && self.target_far <= 1.0) {
            return Err(Error::invalid("target_far", format!("{} outside (0, 1]", self.target_far)));
        }
        self.receiver.validate()?;
        self.model()?;
        self.tx()?;
        Ok(())
    }

    /// Hex prefix of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn model(&self) -> Result<ChannelModel> {
        ChannelModel::new(self.n, self.beta, self.pulse)
    }

    pub fn model_for(&self, n: usize) -> Result<ChannelModel> {
        ChannelModel::new(n, self.beta, self.pulse)
    }

    /// Transmitter for the configured `n`.
    pub fn tx(&self) -> Result<BaselineTx> {
        match self.preamble_len {
            Some(len) => BaselineTx::new(self.n, self.k, PreambleSpec::new(len, self.zc_root)?),
            None => BaselineTx::for_length(self.n, self.zc_root),
        }
    }

    /// Transmitter for block length `n` with `k = n` and the tuned preamble length.
    pub fn tx_for(&self, n: usize) -> Result<BaselineTx> {
        let len = preamble_len_for(n).ok_or_else(|| Error::invalid("lengths", format!("no preamble length for n = {n}")))?;
        BaselineTx::new(n, n, PreambleSpec::new(len, self.zc_root)?)
    }

    /// Header lines stamped on every output file.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut h = vec![
            format!("shortpacket {} {command}", env!("CARGO_PKG_VERSION")),
            format!("config_hash = {}", self.hash()),
        ];
        h.extend(self.to_text().lines().map(str::to_string));
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receiver::CsiMode;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.tx().unwrap().payload_len(), 44);
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "# comment\nn = 64\nk = 64\nseed = 7 # trailing\nsnr_db = 6, 8, 10\ncsi_mode = genie\nl_iedd = 3\nnoise_var = 0.5\n";
        let c = RunConfig::parse_str(text, Path::new("x.cfg")).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.snr_list, vec![6.0, 8.0, 10.0]);
        assert_eq!(c.receiver.csi_mode, CsiMode::Genie);
        assert_eq!(c.receiver.l_iedd, 3);
        assert_eq!(c.receiver.noise_var, NoiseVarMode::Fixed(0.5));
        let back = RunConfig::parse_str(&c.to_text(), Path::new("y.cfg")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new("bad.cfg");
        for text in [
            "nonsense = 1",
            "n = 64\nn = 64",
            "seed 7",
            "k = 32",
            "n_taps = 4",
            "beta = 0",
            "csi_mode = psychic",
            "l_iedd = 0",
        ] {
            assert!(RunConfig::parse_str(text, p).is_err(), "{text}");
        }
        match RunConfig::parse_str("n = 64\nbogus = 2", p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.receiver.apriori_weight = 0.3;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.output_path = Some("out.csv".into());
        assert_ne!(a.hash(), c.hash());
    }
}
