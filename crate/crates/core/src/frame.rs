//! Baseline transmit frame: Zadoff-Chu preamble followed by an LDPC-coded QPSK
//! payload.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldpc::LdpcCode;

/// Default Zadoff-Chu root.
pub const DEFAULT_ZC_ROOT: usize = 7;

/// Zadoff-Chu sequence of length `len` and root `root`.
pub fn zadoff_chu(len: usize, root: usize) -> Result<Vec<Complex64>> {
    if len == 0 || root == 0 || root.gcd(&len) != 1 {
        return Err(Error::invalid(
            "zc_root",
            format!("root {root} is not coprime with length {len}"),
        ));
    }
    let n = len as f64;
    let q = root as f64;
    Ok((0..len)
        .map(|m| {
            let m = m as f64;
            let phase = if len % 2 == 1 {
                -PI * q * m * (m + 1.0) / n
            } else {
                -PI * q * m * m / n
            };
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// QPSK constellation point for a two-bit label. The first bit selects the sign of
/// the real part, the second the sign of the imaginary part; a zero bit maps to `+`.
pub fn qpsk_symbol(b0: u8, b1: u8) -> Complex64 {
    let re = if b0 & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if b1 & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// Gray-mapped unit-energy QPSK.
pub fn qpsk_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::invalid("bits", format!("odd bit count {}", bits.len())));
    }
    Ok(bits.chunks_exact(2).map(|b| qpsk_symbol(b[0], b[1])).collect())
}

/// Hard QPSK demapping.
pub fn qpsk_demap_hard(symbols: &[Complex64]) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|s| [u8::from(s.re < 0.0), u8::from(s.im < 0.0)])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Baseline,
    Phyae,
}

/// One transmitted message of `n` channel uses carrying `k` information bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub symbols: Vec<Complex64>,
    pub kind: FrameKind,
    pub info_bits: Vec<u8>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn average_power(&self) -> f64 {
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }
}

/// Preamble length and root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreambleSpec {
    pub len: usize,
    pub root: usize,
}

impl PreambleSpec {
    pub fn new(len: usize, root: usize) -> Result<Self> {
        zadoff_chu(len, root)?;
        Ok(PreambleSpec { len, root })
    }

    pub fn sequence(&self) -> Vec<Complex64> {
        zadoff_chu(self.len, self.root).expect("validated at construction")
    }
}

/// Preamble length used for a given block length: 16 symbols for `n` in {40, 48},
/// 20 for {56, 64}, 24 for 96. Other lengths are not part of the tuned table.
pub fn preamble_len_for(n: usize) -> Option<usize> {
    match n {
        40 | 48 => Some(16),
        56 | 64 => Some(20),
        96 => Some(24),
        _ => None,
    }
}

/// Frame layout and code of the baseline system.
#[derive(Debug, Clone)]
pub struct BaselineTx {
    n: usize,
    preamble: PreambleSpec,
    preamble_seq: Vec<Complex64>,
    code: LdpcCode,
}

impl BaselineTx {
    /// Layout with `k` information bits, `n` channel uses and the given preamble.
    pub fn new(n: usize, k: usize, preamble: PreambleSpec) -> Result<Self> {
        if preamble.len >= n {
            return Err(Error::invalid(
                "preamble_len",
                format!("{} leaves no payload in {n} symbols", preamble.len),
            ));
        }
        let code = LdpcCode::new(k, 2 * (n - preamble.len))?;
        Ok(BaselineTx {
            n,
            preamble,
            preamble_seq: preamble.sequence(),
            code,
        })
    }

    /// Tuned layout for `k = n` with the table preamble length.
    pub fn for_length(n: usize, root: usize) -> Result<Self> {
        let len = preamble_len_for(n)
            .ok_or_else(|| Error::invalid("n", format!("no tuned preamble length for n = {n}")))?;
        Self::new(n, n, PreambleSpec::new(len, root)?)
    }

    /// `n = k = 64` with a 20-symbol preamble.
    pub fn default_layout() -> Self {
        Self::for_length(64, DEFAULT_ZC_ROOT).expect("default layout is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.code.k()
    }

    pub fn payload_len(&self) -> usize {
        self.n - self.preamble.len
    }

    pub fn preamble_spec(&self) -> PreambleSpec {
        self.preamble
    }

    pub fn preamble(&self) -> &[Complex64] {
        &self.preamble_seq
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    /// `[preamble | QPSK(encode(u))]`, normalized to unit average power.
    pub fn build_frame(&self, info: &[u8]) -> Result<Frame> {
        let coded = self.code.encode(info)?;
        let mut symbols = Vec::with_capacity(self.n);
        symbols.extend_from_slice(&self.preamble_seq);
        symbols.extend(qpsk_map(&coded)?);
        debug_assert_eq!(symbols.len(), self.n);
        let p = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.n as f64;
        let scale = p.sqrt().recip();
        symbols.iter_mut().for_each(|s| *s *= scale);
        Ok(Frame {
            symbols,
            kind: FrameKind::Baseline,
            info_bits: info.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zc_is_unit_modulus_and_starts_at_one() {
        for (len, root) in [(20, 7), (16, 7), (24, 7), (13, 5), (63, 25)] {
            let z = zadoff_chu(len, root).unwrap();
            assert_eq!(z[0], Complex64::new(1.0, 0.0));
            assert!(z.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        }
        assert!(zadoff_chu(20, 4).is_err());
        assert!(zadoff_chu(20, 0).is_err());
    }

    #[test]
    fn zc_periodic_autocorrelation_is_ideal() {
        let z = zadoff_chu(20, 7).unwrap();
        for lag in 1..20 {
            let acc: Complex64 = (0..20).map(|m| z[m] * z[(m + lag) % 20].conj()).sum();
            assert!(acc.norm() < 1e-9, "lag {lag}: {}", acc.norm());
        }
    }

    #[test]
    fn qpsk_mapping() {
        let s = qpsk_map(&[0, 0]).unwrap()[0];
        assert_relative_eq!(s.re, 0.7071067811865476);
        assert_relative_eq!(s.im, 0.7071067811865476);
        assert_eq!(qpsk_map(&[0, 1]).unwrap()[0].im, -FRAC_1_SQRT_2);
        assert_eq!(qpsk_map(&[1, 0]).unwrap()[0].re, -FRAC_1_SQRT_2);
        assert!(qpsk_map(&[1, 0, 1]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bits: Vec<u8> = (0..88).map(|_| rng.random_range(0..2)).collect();
        let sym = qpsk_map(&bits).unwrap();
        assert_eq!(sym.len(), 44);
        assert!(sym.iter().all(|s| (s.norm_sqr() - 1.0).abs() < 1e-12));
        assert_eq!(qpsk_demap_hard(&sym), bits);
    }

    #[test]
    fn default_frame_layout() {
        let tx = BaselineTx::default_layout();
        assert_eq!(tx.n(), 64);
        assert_eq!(tx.preamble().len(), 20);
        assert_eq!(tx.payload_len(), 44);
        let f = tx.build_frame(&[0; 64]).unwrap();
        assert_eq!(f.len(), 64);
        assert_relative_eq!(f.average_power(), 1.0, epsilon = 1e-12);
        // all-zero codeword maps to a constant payload
        assert!(f.symbols[20..].iter().all(|s| *s == qpsk_symbol(0, 0)));
        assert!(tx.build_frame(&[0; 63]).is_err());
    }

    #[test]
    fn length_table() {
        for (n, p) in [(40, 16), (48, 16), (56, 20), (64, 20), (96, 24)] {
            let tx = BaselineTx::for_length(n, DEFAULT_ZC_ROOT).unwrap();
            assert_eq!(tx.preamble().len(), p);
            assert_eq!(tx.k(), n);
            assert_eq!(tx.code().tx_len(), 2 * (n - p));
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let u: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let f = tx.build_frame(&u).unwrap();
            assert_eq!(f.len(), n);
            assert_relative_eq!(f.average_power(), 1.0, epsilon = 1e-12);
            assert_eq!(f, tx.build_frame(&u).unwrap());
        }
        assert!(BaselineTx::for_length(50, DEFAULT_ZC_ROOT).is_err());
    }
}
