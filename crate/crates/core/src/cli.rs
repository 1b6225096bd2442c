//! Command-line front end.

use std::ffi::OsString;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chansim::{export_golden, from_pairs};
use crate::config::RunConfig;
use crate::detector::{calibrate_threshold, Calibration, Detector};
use crate::error::{Error, Result};
use crate::frame::BaselineTx;
use crate::metrics::{
    der_sweep, error_rate_sweep, papr_ccdf, run_point, trial_rng, write_csv, write_jsonl, write_papr_csv,
    MetricRecord, PointStats, SweepSpec,
};
use crate::receiver::{CsiMode, Receiver};

/// SNR range over which calibration windows draw their noise power.
const CALIBRATION_SNR: (f64, f64) = (0.0, 20.0);
const STREAM_PAPR: u64 = 3;

#[derive(Debug, Parser)]
#[command(name = "shortpacket", version, about = "Short-packet link simulator and baseline receiver")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrates the detection threshold on noise-only windows.
    Calibrate {
        #[arg(long)]
        far: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "calibration.json")]
        out: PathBuf,
    },
    /// Detection error rate versus SNR.
    SweepDer(SweepArgs),
    /// BER and BLER versus SNR.
    SweepBler {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Overrides the configured CSI mode.
        #[arg(long)]
        csi: Option<CsiMode>,
    },
    /// BLER versus block length at a fixed SNR.
    SweepLength(SweepArgs),
    /// PAPR CCDF of baseline frames or imported messages.
    Papr {
        /// JSON-lines file of `{bits, symbols}` messages.
        #[arg(long)]
        import: Option<PathBuf>,
        #[arg(long)]
        oversample: Option<usize>,
        #[arg(long, default_value = "papr.csv")]
        out: PathBuf,
    },
    /// Writes golden channel vectors as JSON lines.
    Golden {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value = "golden.jsonl")]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    /// Output file; defaults to the configured output path or `<command>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write JSON lines instead of CSV.
    #[arg(long)]
    jsonl: bool,
    /// Threshold sidecar written by `calibrate`.
    #[arg(long)]
    eta_file: Option<PathBuf>,
}

/// One imported message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportedMessage {
    pub bits: Vec<u8>,
    pub symbols: Vec<[f64; 2]>,
}

impl ImportedMessage {
    pub fn complex(&self) -> Vec<Complex64> {
        from_pairs(&self.symbols)
    }
}

/// Reads a message JSON-lines file. Blank lines and `#` lines are skipped; all
/// messages must share one length.
pub fn read_messages(path: &Path) -> Result<Vec<ImportedMessage>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<ImportedMessage> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let m: ImportedMessage = serde_json::from_str(t).map_err(|e| err(e.to_string()))?;
        if m.symbols.is_empty() {
            return Err(err("message without symbols".into()));
        }
        if m.bits.iter().any(|&b| b > 1) {
            return Err(err("bits must be 0 or 1".into()));
        }
        if m.symbols.iter().flatten().any(|v| !v.is_finite()) {
            return Err(err("non-finite symbol".into()));
        }
        if let Some(first) = out.first() {
            if first.symbols.len() != m.symbols.len() {
                return Err(err(format!(
                    "message length {} differs from {}",
                    m.symbols.len(),
                    first.symbols.len()
                )));
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Parses `args` (including the program name) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => 1,
                _ => 2,
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::invalid("workers", "at least one worker is required"));
        }
        // fails only if a pool already exists, which then keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }

    match cli.command {
        Command::Calibrate { far, trials, out } => {
            if let Some(f) = far {
                cfg.target_far = f;
            }
            if let Some(t) = trials {
                cfg.calibration_trials = t;
            }
            cfg.validate()?;
            let cal = calibrate(&cfg, &cfg.tx()?)?;
            cal.save(&out)?;
            println!("eta = {:.6} (target FAR {}, {} windows) -> {}", cal.eta, cal.target_far, cal.trials, out.display());
        }
        Command::SweepDer(args) => {
            let tx = cfg.tx()?;
            let rx = receiver(&cfg, tx, args.eta_file.as_deref())?;
            let stats = der_sweep(&rx, &cfg.model()?, &spec(&cfg))?;
            emit(&cfg, "sweep-der", &args, &stats, 0)?;
        }
        Command::SweepBler { sweep, csi } => {
            if let Some(c) = csi {
                cfg.receiver.csi_mode = c;
            }
            let tx = cfg.tx()?;
            let rx = receiver(&cfg, tx, sweep.eta_file.as_deref())?;
            let stats = error_rate_sweep(&rx, &cfg.model()?, &spec(&cfg))?;
            emit(&cfg, "sweep-bler", &sweep, &stats, cfg.receiver.l_iedd)?;
        }
        Command::SweepLength(args) => {
            let mut stats = Vec::new();
            for &n in &cfg.lengths {
                let mut c = cfg.clone();
                c.n = n;
                c.k = n;
                c.preamble_len = None;
                let tx = c.tx_for(n)?;
                let rx = receiver(&c, tx, None)?;
                stats.push(run_point(&rx, &c.model()?, cfg.length_snr_db, &spec(&c), true)?);
            }
            emit(&cfg, "sweep-length", &args, &stats, cfg.receiver.l_iedd)?;
        }
        Command::Papr { import, oversample, out } => {
            let factor = oversample.unwrap_or(cfg.oversample);
            let frames: Vec<Vec<Complex64>> = match &import {
                Some(p) => read_messages(p)?.iter().map(ImportedMessage::complex).collect(),
                None => baseline_frames(&cfg)?,
            };
            let grid: Vec<f64> = (0..=150).map(|i| i as f64 * 0.1).collect();
            let curve = papr_ccdf(&frames, factor, &grid)?;
            let mut header = cfg.header("papr");
            header.push(match &import {
                Some(p) => format!("source = {}", p.display()),
                None => "source = baseline".to_string(),
            });
            write_papr_csv(&out, &header, &curve)?;
            println!("{} frames, oversample {factor} -> {}", frames.len(), out.display());
        }
        Command::Golden { count, out } => {
            export_golden(&cfg.model()?, &out, count, cfg.seed)?;
            println!("{count} golden records -> {}", out.display());
        }
    }
    Ok(())
}

fn spec(cfg: &RunConfig) -> SweepSpec {
    SweepSpec {
        snr_db: cfg.snr_list.clone(),
        trials: cfg.trials,
        none_trials: cfg.none_trials,
        max_block_errors: (cfg.max_block_errors > 0).then_some(cfg.max_block_errors),
        seed: cfg.seed,
    }
}

fn calibrate(cfg: &RunConfig, tx: &BaselineTx) -> Result<Calibration> {
    let det = Detector::new(tx.preamble(), tx.n(), cfg.receiver.detector)?;
    let mut cal = calibrate_threshold(
        &det,
        &cfg.model_for(tx.n())?,
        cfg.target_far,
        cfg.calibration_trials,
        CALIBRATION_SNR,
        cfg.seed,
    )?;
    cal.config_hash = cfg.hash();
    Ok(cal)
}

fn receiver(cfg: &RunConfig, tx: BaselineTx, eta_file: Option<&Path>) -> Result<Receiver> {
    let eta = match (eta_file, cfg.eta) {
        (Some(p), _) => Calibration::load(p)?.eta,
        (None, Some(e)) => e,
        (None, None) => {
            let cal = calibrate(cfg, &tx)?;
            eprintln!("calibrated eta = {:.6} for n = {}", cal.eta, tx.n());
            cal.eta
        }
    };
    Receiver::new(tx, cfg.model()?, eta, cfg.receiver)
}

fn emit(cfg: &RunConfig, command: &str, args: &SweepArgs, stats: &[PointStats], round: usize) -> Result<()> {
    let hash = cfg.hash();
    let records: Vec<MetricRecord> = stats
        .iter()
        .map(|p| {
            let mut padded = p.clone();
            if round == 0 {
                padded.bit_errors = vec![0];
                padded.block_errors = vec![0];
            }
            padded.record(round.max(1), &hash)
        })
        .collect();
    for r in &records {
        println!(
            "n = {:>3}  snr = {:>5.1} dB  trials = {:>7}  der = {:.3e}  far = {:.3e}  ber = {:.3e}  bler = {:.3e}",
            r.n, r.snr_db, r.trials, r.der, r.far, r.ber, r.bler
        );
    }
    let ext = if args.jsonl { "jsonl" } else { "csv" };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{command}.{ext}")));
    let header = cfg.header(command);
    if args.jsonl {
        write_jsonl(&out, &header, &records)
    } else {
        write_csv(&out, &header, &records)
    }
}

fn baseline_frames(cfg: &RunConfig) -> Result<Vec<Vec<Complex64>>> {
    let tx = cfg.tx()?;
    (0..cfg.papr_frames as u64)
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, STREAM_PAPR, i);
            let u: Vec<u8> = (0..tx.k()).map(|_| rng.random_range(0..2)).collect();
            Ok(tx.build_frame(&u)?.symbols)
        })
        .collect()
}
