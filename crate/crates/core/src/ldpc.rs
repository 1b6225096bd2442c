//! 5G NR LDPC code on base graph 2 with short-block rate matching, and a damped
//! min-sum belief propagation decoder that exposes extrinsic information.
//!
//! For `k` information bits the lifting size `Z` is the smallest 38.212 lifting size
//! with `K_b * Z >= k` (`K_b = 6` for `k <= 192`). Only the information columns that
//! carry at least one non-filler bit are kept; the remaining positions of the last
//! kept column are filler (shortened) bits known to be zero. The first `2Z`
//! systematic bits are never transmitted, fillers are skipped, and the transmitted
//! block is the first `E` remaining bits of the mother codeword. Base rows are kept
//! only as far as their parity column is (at least partly) transmitted, with the four
//! core rows always present.
//!
//! With `k = 64`, `E = 88` this is `Z = 11`, `K = 66` with bits 65 and 66 shortened,
//! 22 leading bits punctured and a 121-bit mother codeword whose last 9 bits are
//! punctured.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Finite stand-in for the infinite LLR of a shortened (known zero) bit.
pub const SHORTENED_LLR: f64 = 127.0;

const BG2_CSV: &str = include_str!("../assets/bg2_shifts.csv");
const BG2_ROWS: usize = 42;
const BG2_COLS: usize = 52;
const BG2_INFO_COLS: usize = 10;
const BG2_CORE_ROWS: usize = 4;

/// Non-zero entry of the base graph with its shift for each lifting set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseEntry {
    pub row: usize,
    pub col: usize,
    pub shifts: [u16; 8],
}

/// Parsed base graph 2 shift table. The asset has one line per non-zero entry:
/// `row,col,V(iLS=0),...,V(iLS=7)`; lines starting with `#` are comments.
pub fn bg2_table() -> &'static [BaseEntry] {
    static TABLE: OnceLock<Vec<BaseEntry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        BG2_CSV
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let v: Vec<u16> = l
                    .split(',')
                    .map(|f| f.trim().parse().expect("numeric shift table"))
                    .collect();
                assert_eq!(v.len(), 10, "malformed shift table line {l:?}");
                let mut shifts = [0u16; 8];
                shifts.copy_from_slice(&v[2..]);
                BaseEntry {
                    row: v[0] as usize,
                    col: v[1] as usize,
                    shifts,
                }
            })
            .collect()
    })
}

/// Lifting size and its set index (38.212 Table 5.3.2-1).
pub fn lifting_sizes() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ils, a) in [2usize, 3, 5, 7, 9, 11, 13, 15].into_iter().enumerate() {
        let mut z = a;
        while z <= 384 {
            out.push((z, ils));
            z *= 2;
        }
    }
    out.sort();
    out
}

fn bg2_kb(k: usize) -> usize {
    match k {
        k if k > 640 => 10,
        k if k > 560 => 9,
        k if k > 192 => 8,
        _ => 6,
    }
}

/// Damping convention for check-to-variable messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DampingMode {
    /// `m = lambda * m_new + (1 - lambda) * m_prev`
    #[default]
    WeightNew,
    /// `m = (1 - lambda) * m_new + lambda * m_prev`
    WeightOld,
}

impl std::str::FromStr for DampingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weight-new" => Ok(DampingMode::WeightNew),
            "weight-old" => Ok(DampingMode::WeightOld),
            other => Err(Error::invalid("damping_mode", format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for DampingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DampingMode::WeightNew => "weight-new",
            DampingMode::WeightOld => "weight-old",
        })
    }
}

/// Role of a mother-codeword position after rate matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Transmitted(usize),
    Punctured,
    Filler,
}

/// Lifted, rate-matched base graph 2 code.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    k: usize,
    z: usize,
    set_index: usize,
    info_cols: usize,
    base_rows: usize,
    tx_len: usize,
    /// base column of each reduced column
    base_col_of: Vec<usize>,
    /// check -> variables, CSR layout
    row_start: Vec<usize>,
    edge_var: Vec<usize>,
    positions: Vec<Position>,
    tx_positions: Vec<usize>,
    /// inverse of the core parity block, rows as bitsets over 4Z core parity bits
    core_inv: Vec<Vec<u64>>,
    /// for each extension row: (own variable per lifted row)
    ext_own: Vec<usize>,
}

impl LdpcCode {
    /// Code carrying `k` information bits in `tx_len` transmitted bits.
    pub fn new(k: usize, tx_len: usize) -> Result<Self> {
        if k == 0 || k > 3840 {
            return Err(Error::invalid("k", format!("{k} outside 1..=3840 for base graph 2")));
        }
        let kb = bg2_kb(k);
        let (z, set_index) = lifting_sizes()
            .into_iter()
            .find(|&(z, _)| kb * z >= k)
            .ok_or_else(|| Error::invalid("k", "no lifting size fits"))?;
        let info_cols = k.div_ceil(z);
        let info_tx = info_cols * z - 2 * z - (info_cols * z - k);
        if tx_len <= info_tx {
            return Err(Error::invalid(
                "tx_len",
                format!("{tx_len} leaves no room for parity after {info_tx} systematic bits"),
            ));
        }
        let parity_needed = (tx_len - info_tx).div_ceil(z);
        let base_rows = parity_needed.max(BG2_CORE_ROWS);
        if base_rows > BG2_ROWS {
            return Err(Error::invalid("tx_len", format!("{tx_len} exceeds the mother code")));
        }

        let mut base_col_of: Vec<usize> = (0..info_cols).collect();
        base_col_of.extend(BG2_INFO_COLS..BG2_INFO_COLS + base_rows);
        let mut reduced_of = vec![usize::MAX; BG2_COLS];
        for (r, &b) in base_col_of.iter().enumerate() {
            reduced_of[b] = r;
        }

        let table = bg2_table();
        let mut row_start = Vec::with_capacity(base_rows * z + 1);
        let mut edge_var = Vec::new();
        let mut ext_own = Vec::new();
        for i in 0..base_rows {
            let entries: Vec<&BaseEntry> = table
                .iter()
                .filter(|e| e.row == i && reduced_of[e.col] != usize::MAX)
                .collect();
            for r in 0..z {
                row_start.push(edge_var.len());
                for e in &entries {
                    let shift = e.shifts[set_index] as usize % z;
                    let var = reduced_of[e.col] * z + (r + shift) % z;
                    edge_var.push(var);
                    if i >= BG2_CORE_ROWS && e.col == BG2_INFO_COLS + i {
                        ext_own.push(var);
                    }
                }
            }
        }
        row_start.push(edge_var.len());

        let n_mother = base_col_of.len() * z;
        let mut positions = vec![Position::Punctured; n_mother];
        for p in positions.iter_mut().take(info_cols * z).skip(k) {
            *p = Position::Filler;
        }
        let mut tx_positions = Vec::with_capacity(tx_len);
        for (pos, role) in positions.iter_mut().enumerate().skip(2 * z) {
            if tx_positions.len() == tx_len {
                break;
            }
            if *role != Position::Filler {
                *role = Position::Transmitted(tx_positions.len());
                tx_positions.push(pos);
            }
        }
        debug_assert_eq!(tx_positions.len(), tx_len);

        let mut code = LdpcCode {
            k,
            z,
            set_index,
            info_cols,
            base_rows,
            tx_len,
            base_col_of,
            row_start,
            edge_var,
            positions,
            tx_positions,
            core_inv: Vec::new(),
            ext_own,
        };
        code.core_inv = code.invert_core()?;
        Ok(code)
    }

    /// The `k = 64`, `E = 88` code of the default frame.
    pub fn default_short() -> Self {
        Self::new(64, 88).expect("default code parameters are valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lifting(&self) -> usize {
        self.z
    }

    pub fn set_index(&self) -> usize {
        self.set_index
    }

    /// Information columns kept times `Z`, fillers included.
    pub fn k_lifted(&self) -> usize {
        self.info_cols * self.z
    }

    pub fn info_cols(&self) -> usize {
        self.info_cols
    }

    pub fn base_rows(&self) -> usize {
        self.base_rows
    }

    pub fn base_columns(&self) -> &[usize] {
        &self.base_col_of
    }

    pub fn tx_len(&self) -> usize {
        self.tx_len
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.tx_len as f64
    }

    pub fn mother_len(&self) -> usize {
        self.base_col_of.len() * self.z
    }

    pub fn num_checks(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn tx_positions(&self) -> &[usize] {
        &self.tx_positions
    }

    /// Variables of check `c`.
    pub fn check(&self, c: usize) -> &[usize] {
        &self.edge_var[self.row_start[c]..self.row_start[c + 1]]
    }

    /// `H c = 0` over GF(2) for a mother codeword.
    pub fn syndrome_ok(&self, word: &[u8]) -> bool {
        (0..self.num_checks()).all(|c| self.check(c).iter().fold(0u8, |acc, &v| acc ^ word[v]) == 0)
    }

    fn core_len(&self) -> usize {
        BG2_CORE_ROWS * self.z
    }

    fn core_var_offset(&self) -> usize {
        self.info_cols * self.z
    }

    fn invert_core(&self) -> Result<Vec<Vec<u64>>> {
        let n = self.core_len();
        let words = n.div_ceil(64);
        let off = self.core_var_offset();
        // augmented [M | I]
        let mut m: Vec<Vec<u64>> = vec![vec![0; 2 * words]; n];
        for (r, row) in m.iter_mut().enumerate() {
            for &v in self.check(r) {
                if v >= off && v < off + n {
                    let c = v - off;
                    row[c / 64] ^= 1 << (c % 64);
                }
            }
            row[words + r / 64] |= 1 << (r % 64);
        }
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| m[r][col / 64] >> (col % 64) & 1 == 1)
                .ok_or_else(|| Error::invalid("base graph", "core parity block is singular"))?;
            m.swap(col, pivot);
            let prow = m[col].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != col && row[col / 64] >> (col % 64) & 1 == 1 {
                    for (a, b) in row.iter_mut().zip(&prow) {
                        *a ^= b;
                    }
                }
            }
        }
        Ok(m.into_iter().map(|row| row[words..].to_vec()).collect())
    }

    /// Systematic mother codeword (fillers zero).
    pub fn encode_mother(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(Error::Length {
                what: "information bits",
                expected: self.k,
                got: info.len(),
            });
        }
        let mut word = vec![0u8; self.mother_len()];
        for (w, &b) in word.iter_mut().zip(info) {
            *w = b & 1;
        }
        let off = self.core_var_offset();
        let ncore = self.core_len();

        // info contribution to the core checks
        let words = ncore.div_ceil(64);
        let mut lambda = vec![0u64; words];
        for r in 0..ncore {
            let bit = self
                .check(r)
                .iter()
                .filter(|&&v| v < off)
                .fold(0u8, |acc, &v| acc ^ word[v]);
            if bit == 1 {
                lambda[r / 64] |= 1 << (r % 64);
            }
        }
        for (i, row) in self.core_inv.iter().enumerate() {
            let parity = row
                .iter()
                .zip(&lambda)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            word[off + i] = parity as u8;
        }

        // extension rows: each has a single own parity bit
        for (r, &own) in (ncore..self.num_checks()).zip(&self.ext_own) {
            let bit = self
                .check(r)
                .iter()
                .filter(|&&v| v != own)
                .fold(0u8, |acc, &v| acc ^ word[v]);
            word[own] = bit;
        }
        Ok(word)
    }

    /// Encodes and rate-matches `k` bits into `E` transmitted bits.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let word = self.encode_mother(info)?;
        Ok(self.rate_match(&word))
    }

    pub fn rate_match(&self, mother: &[u8]) -> Vec<u8> {
        self.tx_positions.iter().map(|&p| mother[p]).collect()
    }

    /// Expands transmitted-bit LLRs to the mother codeword: punctured bits get 0,
    /// fillers get [`SHORTENED_LLR`].
    pub fn de_rate_match(&self, llr: &[f64]) -> Vec<f64> {
        self.positions
            .iter()
            .map(|p| match p {
                Position::Transmitted(i) => llr[*i],
                Position::Punctured => 0.0,
                Position::Filler => SHORTENED_LLR,
            })
            .collect()
    }

    /// Convenience wrapper allocating a fresh decoder.
    pub fn bp_decode(&self, llr: &[f64], cfg: &BpConfig) -> Result<BpOutput> {
        BpDecoder::new(self).decode(llr, cfg)
    }
}

/// Decoder parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub iterations: usize,
    pub damping: f64,
    pub damping_mode: DampingMode,
    /// Stop as soon as the hard decisions satisfy every check.
    pub early_stop: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            iterations: 10,
            damping: 0.7,
            damping_mode: DampingMode::WeightNew,
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    /// Hard decisions on the `k` information bits.
    pub info: Vec<u8>,
    /// Extrinsic LLRs on the `E` transmitted positions.
    pub extrinsic: Vec<f64>,
    /// A-posteriori LLRs on the mother codeword.
    pub total: Vec<f64>,
    pub parity_ok: bool,
    pub iterations: usize,
}

/// Flooding min-sum decoder with damped check-to-variable messages. Holds its own
/// message buffers so repeated decodes do not allocate.
#[derive(Debug, Clone)]
pub struct BpDecoder<'a> {
    code: &'a LdpcCode,
    c2v: Vec<f64>,
    c2v_new: Vec<f64>,
    v2c: Vec<f64>,
    total: Vec<f64>,
    hard: Vec<u8>,
}

impl<'a> BpDecoder<'a> {
    pub fn new(code: &'a LdpcCode) -> Self {
        let edges = code.edge_var.len();
        BpDecoder {
            code,
            c2v: vec![0.0; edges],
            c2v_new: vec![0.0; edges],
            v2c: vec![0.0; edges],
            total: vec![0.0; code.mother_len()],
            hard: vec![0; code.mother_len()],
        }
    }

    /// Decodes `E` transmitted-position LLRs (positive favours bit 0).
    pub fn decode(&mut self, llr: &[f64], cfg: &BpConfig) -> Result<BpOutput> {
        let code = self.code;
        if llr.len() != code.tx_len {
            return Err(Error::Length {
                what: "channel LLRs",
                expected: code.tx_len,
                got: llr.len(),
            });
        }
        if llr.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("channel LLRs"));
        }
        if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
            return Err(Error::invalid("damping", format!("{} outside (0, 1]", cfg.damping)));
        }
        let input = code.de_rate_match(llr);
        let (w_new, w_old) = match cfg.damping_mode {
            DampingMode::WeightNew => (cfg.damping, 1.0 - cfg.damping),
            DampingMode::WeightOld => (1.0 - cfg.damping, cfg.damping),
        };

        self.c2v.iter_mut().for_each(|m| *m = 0.0);
        self.total.copy_from_slice(&input);
        let mut parity_ok = false;
        let mut iterations = 0;
        for _ in 0..cfg.iterations.max(1) {
            iterations += 1;
            for (e, &v) in code.edge_var.iter().enumerate() {
                self.v2c[e] = self.total[v] - self.c2v[e];
            }
            for c in 0..code.num_checks() {
                let (lo, hi) = (code.row_start[c], code.row_start[c + 1]);
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut arg = lo;
                let mut negative = false;
                for e in lo..hi {
                    let m = self.v2c[e];
                    negative ^= m < 0.0;
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in lo..hi {
                    let mag = if e == arg { min2 } else { min1 };
                    let neg = negative ^ (self.v2c[e] < 0.0);
                    self.c2v_new[e] = if neg { -mag } else { mag };
                }
            }
            for (m, new) in self.c2v.iter_mut().zip(&self.c2v_new) {
                *m = w_new * new + w_old * *m;
            }
            self.total.copy_from_slice(&input);
            for (e, &v) in code.edge_var.iter().enumerate() {
                self.total[v] += self.c2v[e];
            }
            for (h, t) in self.hard.iter_mut().zip(&self.total) {
                *h = u8::from(*t < 0.0);
            }
            parity_ok = code.syndrome_ok(&self.hard);
            if parity_ok && cfg.early_stop {
                break;
            }
        }

        let extrinsic = code
            .tx_positions
            .iter()
            .map(|&p| self.total[p] - input[p])
            .collect();
        Ok(BpOutput {
            info: self.hard[..code.k].to_vec(),
            extrinsic,
            total: self.total.clone(),
            parity_ok,
            iterations,
        })
    }
}
