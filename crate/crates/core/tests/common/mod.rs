//! Reference implementations shared by the integration tests. Nothing here calls the
//! library routine it is used to check.

#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

/// QPSK point for bit pair `(b0, b1)`, written out independently of the library.
pub fn qpsk(b0: usize, b1: usize) -> Complex64 {
    Complex64::new(
        if b0 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
        if b1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
    )
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact bit LLRs by enumerating every QPSK sequence of length `payload`.
///
/// `obs[t] = sum_l taps[l] x[t - l] + noise` for `t < payload + tail`, where
/// `x[-j] = prefix[prefix.len() - j]` (zero past the prefix start) and `x[t] = 0` for
/// `t >= payload`. The prior of a sequence is `weight * sum_bits (+-L / 2)`.
pub fn brute_force_llrs(
    taps: &[Complex64],
    prefix: &[Complex64],
    payload: usize,
    obs: &[Complex64],
    a_priori: &[f64],
    weight: f64,
    noise_var: f64,
) -> Vec<f64> {
    let total = 1usize << (2 * payload);
    let mut zero: Vec<Vec<f64>> = vec![Vec::new(); 2 * payload];
    let mut one: Vec<Vec<f64>> = vec![Vec::new(); 2 * payload];
    let mut bits = vec![0usize; 2 * payload];
    for idx in 0..total {
        for (j, b) in bits.iter_mut().enumerate() {
            *b = (idx >> j) & 1;
        }
        let x = |t: isize| -> Complex64 {
            if t < 0 {
                let j = (-t) as usize;
                if j <= prefix.len() {
                    prefix[prefix.len() - j]
                } else {
                    Complex64::default()
                }
            } else if (t as usize) < payload {
                let t = t as usize;
                qpsk(bits[2 * t], bits[2 * t + 1])
            } else {
                Complex64::default()
            }
        };
        let mut metric = 0.0;
        for (t, y) in obs.iter().enumerate() {
            let mut e = Complex64::default();
            for (l, h) in taps.iter().enumerate() {
                e += h * x(t as isize - l as isize);
            }
            metric -= (y - e).norm_sqr() / noise_var;
        }
        if !a_priori.is_empty() {
            for (j, &b) in bits.iter().enumerate() {
                metric += weight * if b == 0 { 0.5 } else { -0.5 } * a_priori[j];
            }
        }
        for (j, &b) in bits.iter().enumerate() {
            if b == 0 {
                zero[j].push(metric);
            } else {
                one[j].push(metric);
            }
        }
    }
    (0..2 * payload).map(|j| log_sum_exp(&zero[j]) - log_sum_exp(&one[j])).collect()
}

/// One entry of the base-graph table as read straight from the asset file.
pub struct ShiftEntry {
    pub row: usize,
    pub col: usize,
    pub shifts: [usize; 8],
}

pub fn read_shift_table() -> Vec<ShiftEntry> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/bg2_shifts.csv");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<usize> = l.split(',').map(|s| s.trim().parse().unwrap()).collect();
            let mut shifts = [0; 8];
            shifts.copy_from_slice(&v[2..10]);
            ShiftEntry {
                row: v[0],
                col: v[1],
                shifts,
            }
        })
        .collect()
}

/// Checks `H x = 0` for the lifted base graph restricted to `rows` base rows and the
/// base columns listed in `columns` (in codeword order); columns absent from the list
/// are zero. Row `r` of a block with shift `s` touches column `(r + s) mod z`.
pub fn lifted_syndrome_zero(word: &[u8], columns: &[usize], rows: usize, z: usize, set: usize) -> bool {
    let table = read_shift_table();
    let bit = |base_col: usize, j: usize| -> u8 {
        columns
            .iter()
            .position(|&c| c == base_col)
            .map_or(0, |k| word[k * z + j])
    };
    for row in 0..rows {
        for r in 0..z {
            let mut parity = 0u8;
            for e in table.iter().filter(|e| e.row == row) {
                let s = e.shifts[set] % z;
                parity ^= bit(e.col, (r + s) % z);
            }
            if parity != 0 {
                return false;
            }
        }
    }
    true
}

/// Plain flooding min-sum over an explicit edge list, undamped.
pub fn plain_min_sum(checks: &[Vec<usize>], input: &[f64], iterations: usize) -> Vec<f64> {
    let mut c2v: Vec<Vec<f64>> = checks.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut total = input.to_vec();
    for _ in 0..iterations {
        let mut next = c2v.clone();
        for (ci, vars) in checks.iter().enumerate() {
            for (ei, _) in vars.iter().enumerate() {
                let mut sign = 1.0;
                let mut mag = f64::INFINITY;
                for (ej, &vj) in vars.iter().enumerate() {
                    if ej == ei {
                        continue;
                    }
                    let m = total[vj] - c2v[ci][ej];
                    if m < 0.0 {
                        sign = -sign;
                    }
                    mag = mag.min(m.abs());
                }
                next[ci][ei] = sign * mag;
            }
        }
        c2v = next;
        total = input.to_vec();
        for (ci, vars) in checks.iter().enumerate() {
            for (ei, &v) in vars.iter().enumerate() {
                total[v] += c2v[ci][ei];
            }
        }
    }
    total
}
