//! BCJR equalizer for QPSK over a finite ISI channel.
//!
//! The trellis state holds the `L - 1` most recent QPSK symbols (1024 states for the
//! six-tap baseline). Branch metrics are Gaussian log-likelihoods plus a weighted
//! a-priori term built from decoder feedback. Max-log is the production mode; the
//! exact (log-sum-exp) mode exists to check the recursion against brute force.
//!
//! Boundary handling: symbols before the payload are known (preamble tail). They are
//! folded into the first observations and the recursion starts from a single pinned
//! state. Observations after the last payload symbol (the channel tail, where the
//! transmitter is silent) only depend on the final state and enter as the terminal
//! backward metric.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::qpsk_symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcjrMode {
    #[default]
    MaxLog,
    /// Log-sum-exp recursion; exact MAP marginals.
    Exact,
}

impl std::str::FromStr for BcjrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-log" => Ok(BcjrMode::MaxLog),
            "exact" => Ok(BcjrMode::Exact),
            _ => Err(Error::invalid("bcjr_mode", format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for BcjrMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BcjrMode::MaxLog => "max-log",
            BcjrMode::Exact => "exact",
        })
    }
}

/// QPSK symbol for a trellis digit `u = 2 b0 + b1`.
fn digit_symbol(u: usize) -> Complex64 {
    qpsk_symbol((u >> 1) as u8, (u & 1) as u8)
}

/// Which symbols surround the payload in the observed snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisLayout {
    /// Known symbols immediately before the payload, oldest first. Positions older than
    /// the slice are taken as zero.
    pub prefix: Vec<Complex64>,
    pub payload_len: usize,
    /// Samples observed after the last payload symbol, during which nothing new is sent.
    pub tail_len: usize,
}

/// Channel trellis with precomputed expected outputs.
#[derive(Debug, Clone)]
pub struct IsiTrellis {
    taps: Vec<Complex64>,
    memory: usize,
    states: usize,
    state_re: Vec<f64>,
    state_im: Vec<f64>,
    input_out: [Complex64; 4],
    /// correction added to the first `memory` observations
    prefix_fix: Vec<Complex64>,
    /// expected tail samples per final state, `tail_len x states`
    tail_out: Vec<Vec<Complex64>>,
    payload_len: usize,
    tail_len: usize,
}

/// Builds the trellis for channel taps `taps` (`taps[0]` acts on the newest symbol).
pub fn build_trellis(taps: &[Complex64], layout: &TrellisLayout) -> Result<IsiTrellis> {
    if taps.len() < 2 || taps.len() > 7 {
        return Err(Error::invalid(
            "taps",
            format!("tap count {} outside 2..=7", taps.len()),
        ));
    }
    if layout.payload_len == 0 {
        return Err(Error::invalid("payload_len", "empty payload"));
    }
    let memory = taps.len() - 1;
    let states = 1usize << (2 * memory);

    let digit = |s: usize, l: usize| (s >> (2 * (l - 1))) & 3;
    let mut state_re = vec![0.0; states];
    let mut state_im = vec![0.0; states];
    for s in 0..states {
        let v: Complex64 = (1..=memory).map(|l| taps[l] * digit_symbol(digit(s, l))).sum();
        state_re[s] = v.re;
        state_im[s] = v.im;
    }
    let mut input_out = [Complex64::new(0.0, 0.0); 4];
    for (u, o) in input_out.iter_mut().enumerate() {
        *o = taps[0] * digit_symbol(u);
    }

    // the pinned start state has every digit 0; swap its contribution for the real prefix
    let prefix_at = |back: usize| -> Complex64 {
        // back = 1 is the last prefix symbol
        layout
            .prefix
            .len()
            .checked_sub(back)
            .map(|i| layout.prefix[i])
            .unwrap_or_default()
    };
    let dummy = digit_symbol(0);
    let prefix_fix = (0..memory.min(layout.payload_len))
        .map(|t| {
            (t + 1..=memory)
                .map(|l| taps[l] * (dummy - prefix_at(l - t)))
                .sum()
        })
        .collect();

    let tail_out = (0..layout.tail_len)
        .map(|j| {
            (0..states)
                .map(|s| {
                    (j + 1..=memory)
                        .map(|l| taps[l] * digit_symbol(digit(s, l - j)))
                        .sum()
                })
                .collect()
        })
        .collect();

    Ok(IsiTrellis {
        taps: taps.to_vec(),
        memory,
        states,
        state_re,
        state_im,
        input_out,
        prefix_fix,
        tail_out,
        payload_len: layout.payload_len,
        tail_len: layout.tail_len,
    })
}

impl IsiTrellis {
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn tail_len(&self) -> usize {
        self.tail_len
    }

    /// Successor of `state` after input digit `u`.
    pub fn next_state(&self, state: usize, u: usize) -> usize {
        ((state << 2) | u) & (self.states - 1)
    }

    /// Expected noise-free output for the branch leaving `state` with input `u`.
    pub fn branch_gain(&self, state: usize, u: usize) -> Complex64 {
        Complex64::new(self.state_re[state], self.state_im[state]) + self.input_out[u]
    }

    /// Initial forward metrics: zero at the pinned state, `-inf` elsewhere.
    pub fn initial_alpha(&self) -> Vec<f64> {
        let mut a = vec![f64::NEG_INFINITY; self.states];
        a[0] = 0.0;
        a
    }
}

/// Reusable buffers for the forward/backward recursion.
#[derive(Debug, Clone, Default)]
pub struct Equalizer {
    alpha: Vec<f64>,
    gamma: Vec<f64>,
    beta: Vec<f64>,
    beta_next: Vec<f64>,
    zr: Vec<f64>,
    zi: Vec<f64>,
}

#[inline(always)]
fn combine2<const EXACT: bool>(a: f64, b: f64) -> f64 {
    if EXACT {
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + ((a - m).exp() + (b - m).exp()).ln()
        }
    } else {
        a.max(b)
    }
}

fn reduce<const EXACT: bool>(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !EXACT || m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Equalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// A-posteriori LLRs (positive favours bit 0) for the `2 * payload_len` coded bits.
    ///
    /// `obs` holds the payload observations followed by the tail observations.
    /// `a_priori` may be empty (no feedback); otherwise it holds one LLR per coded bit
    /// and enters each branch as `weight * sum_b (+-L_b / 2)`.
    pub fn run(
        &mut self,
        trellis: &IsiTrellis,
        obs: &[Complex64],
        a_priori: &[f64],
        weight: f64,
        noise_var: f64,
        mode: BcjrMode,
    ) -> Result<Vec<f64>> {
        let p = trellis.payload_len;
        if obs.len() != p + trellis.tail_len {
            return Err(Error::Length {
                what: "equalizer observations",
                expected: p + trellis.tail_len,
                got: obs.len(),
            });
        }
        if !a_priori.is_empty() && a_priori.len() != 2 * p {
            return Err(Error::Length {
                what: "a-priori LLRs",
                expected: 2 * p,
                got: a_priori.len(),
            });
        }
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(Error::invalid("noise_var", format!("{noise_var} is not positive")));
        }
        if obs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
            || a_priori.iter().any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("equalizer input"));
        }
        match mode {
            BcjrMode::MaxLog => Ok(self.recurse::<false>(trellis, obs, a_priori, weight, noise_var)),
            BcjrMode::Exact => Ok(self.recurse::<true>(trellis, obs, a_priori, weight, noise_var)),
        }
    }

    fn recurse<const EXACT: bool>(
        &mut self,
        tr: &IsiTrellis,
        obs: &[Complex64],
        a_priori: &[f64],
        weight: f64,
        noise_var: f64,
    ) -> Vec<f64> {
        let p = tr.payload_len;
        let ns = tr.states;
        let quarter = ns >> 2;
        let top = 2 * (tr.memory - 1);
        let inv = 1.0 / noise_var;

        self.alpha.resize((p + 1) * ns, 0.0);
        self.gamma.resize(p * 4 * ns, 0.0);
        self.beta.resize(ns, 0.0);
        self.beta_next.resize(ns, 0.0);
        self.zr.resize(ns, 0.0);
        self.zi.resize(ns, 0.0);

        // branch metrics, laid out [t][u][s]
        for t in 0..p {
            let mut y = obs[t];
            if let Some(fix) = tr.prefix_fix.get(t) {
                y += fix;
            }
            for s in 0..ns {
                self.zr[s] = y.re - tr.state_re[s];
                self.zi[s] = y.im - tr.state_im[s];
            }
            for u in 0..4 {
                let prior = if a_priori.is_empty() {
                    0.0
                } else {
                    let l0 = a_priori[2 * t];
                    let l1 = a_priori[2 * t + 1];
                    let s0 = if u >> 1 == 0 { 0.5 } else { -0.5 };
                    let s1 = if u & 1 == 0 { 0.5 } else { -0.5 };
                    weight * (s0 * l0 + s1 * l1)
                };
                let io = tr.input_out[u];
                let g = &mut self.gamma[(t * 4 + u) * ns..(t * 4 + u + 1) * ns];
                for ((g, zr), zi) in g.iter_mut().zip(&self.zr).zip(&self.zi) {
                    let dr = zr - io.re;
                    let di = zi - io.im;
                    *g = prior - (dr * dr + di * di) * inv;
                }
            }
        }

        // forward
        self.alpha[..ns].copy_from_slice(&tr.initial_alpha());
        for t in 0..p {
            let (done, rest) = self.alpha.split_at_mut((t + 1) * ns);
            let a = &done[t * ns..];
            let next = &mut rest[..ns];
            let mut peak = f64::NEG_INFINITY;
            for u in 0..4 {
                let g = &self.gamma[(t * 4 + u) * ns..(t * 4 + u + 1) * ns];
                for q in 0..quarter {
                    let mut acc = f64::NEG_INFINITY;
                    for k in 0..4 {
                        let s = q | (k << top);
                        acc = combine2::<EXACT>(acc, a[s] + g[s]);
                    }
                    next[(q << 2) | u] = acc;
                    peak = peak.max(acc);
                }
            }
            if peak.is_finite() {
                next.iter_mut().for_each(|v| *v -= peak);
            }
        }

        // terminal metric from the tail observations
        for s in 0..ns {
            self.beta[s] = -tr
                .tail_out
                .iter()
                .zip(&obs[p..])
                .map(|(out, y)| (y - out[s]).norm_sqr())
                .sum::<f64>()
                * inv;
        }

        // backward with per-step LLRs
        let mask = ns - 1;
        let mut llr = vec![0.0; 2 * p];
        let mut branch = [0.0f64; 4];
        for t in (0..p).rev() {
            let a = &self.alpha[t * ns..(t + 1) * ns];
            for (u, bu) in branch.iter_mut().enumerate() {
                let g = &self.gamma[(t * 4 + u) * ns..(t * 4 + u + 1) * ns];
                let beta = &self.beta;
                *bu = reduce::<EXACT>((0..ns).map(move |s| a[s] + g[s] + beta[((s << 2) | u) & mask]));
            }
            llr[2 * t] = combine2::<EXACT>(branch[0], branch[1]) - combine2::<EXACT>(branch[2], branch[3]);
            llr[2 * t + 1] =
                combine2::<EXACT>(branch[0], branch[2]) - combine2::<EXACT>(branch[1], branch[3]);

            let mut peak = f64::NEG_INFINITY;
            for s in 0..ns {
                let base = (s << 2) & mask;
                let mut acc = f64::NEG_INFINITY;
                for u in 0..4 {
                    let g = self.gamma[(t * 4 + u) * ns + s];
                    acc = combine2::<EXACT>(acc, g + self.beta[base | u]);
                }
                self.beta_next[s] = acc;
                peak = peak.max(acc);
            }
            if peak.is_finite() {
                self.beta_next.iter_mut().for_each(|v| *v -= peak);
            }
            std::mem::swap(&mut self.beta, &mut self.beta_next);
        }
        llr
    }
}

/// Convenience wrapper allocating fresh buffers.
pub fn equalize(
    trellis: &IsiTrellis,
    obs: &[Complex64],
    a_priori: &[f64],
    weight: f64,
    noise_var: f64,
    mode: BcjrMode,
) -> Result<Vec<f64>> {
    Equalizer::new().run(trellis, obs, a_priori, weight, noise_var, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_taps() -> Vec<Complex64> {
        let mut t = vec![c(0.0, 0.0); 6];
        t[0] = c(1.0, 0.0);
        t
    }

    /// Exact bit LLRs by enumerating every payload sequence.
    fn brute_force(
        taps: &[Complex64],
        layout: &TrellisLayout,
        obs: &[Complex64],
        a_priori: &[f64],
        weight: f64,
        noise_var: f64,
    ) -> Vec<f64> {
        let p = layout.payload_len;
        let m = taps.len() - 1;
        let total = 4usize.pow(p as u32);
        let mut metrics = Vec::with_capacity(total);
        for idx in 0..total {
            let digits: Vec<usize> = (0..p).map(|i| (idx >> (2 * i)) & 3).collect();
            let sym = |pos: isize| -> Complex64 {
                if pos < 0 {
                    let back = (-pos) as usize;
                    layout
                        .prefix
                        .len()
                        .checked_sub(back)
                        .map(|i| layout.prefix[i])
                        .unwrap_or_default()
                } else if (pos as usize) < p {
                    digit_symbol(digits[pos as usize])
                } else {
                    c(0.0, 0.0)
                }
            };
            let mut metric = 0.0;
            for (t, y) in obs.iter().enumerate() {
                let expect: Complex64 = (0..=m).map(|l| taps[l] * sym(t as isize - l as isize)).sum();
                metric -= (y - expect).norm_sqr() / noise_var;
            }
            for (t, &d) in digits.iter().enumerate() {
                if !a_priori.is_empty() {
                    let s0 = if d >> 1 == 0 { 0.5 } else { -0.5 };
                    let s1 = if d & 1 == 0 { 0.5 } else { -0.5 };
                    metric += weight * (s0 * a_priori[2 * t] + s1 * a_priori[2 * t + 1]);
                }
            }
            metrics.push((digits, metric));
        }
        let lse = |vals: Vec<f64>| {
            let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
        };
        let mut out = Vec::with_capacity(2 * p);
        for t in 0..p {
            for bit in 0..2 {
                let shift = 1 - bit;
                let zero = metrics
                    .iter()
                    .filter(|(d, _)| (d[t] >> shift) & 1 == 0)
                    .map(|(_, v)| *v)
                    .collect();
                let one = metrics
                    .iter()
                    .filter(|(d, _)| (d[t] >> shift) & 1 == 1)
                    .map(|(_, v)| *v)
                    .collect();
                out.push(lse(zero) - lse(one));
            }
        }
        out
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        n_taps: usize,
        payload: usize,
        tail: usize,
    ) -> (Vec<Complex64>, TrellisLayout, Vec<Complex64>) {
        let taps: Vec<Complex64> = (0..n_taps)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let prefix: Vec<Complex64> = (0..3)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.28)))
            .collect();
        let obs = (0..payload + tail)
            .map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        (
            taps,
            TrellisLayout {
                prefix,
                payload_len: payload,
                tail_len: tail,
            },
            obs,
        )
    }

    #[test]
    fn trellis_counts() {
        let layout = TrellisLayout {
            prefix: vec![],
            payload_len: 4,
            tail_len: 0,
        };
        let tr = build_trellis(&unit_taps(), &layout).unwrap();
        assert_eq!(tr.states(), 1024);
        let mut incoming = vec![0usize; 1024];
        for s in 0..1024 {
            for u in 0..4 {
                incoming[tr.next_state(s, u)] += 1;
            }
        }
        assert!(incoming.iter().all(|&c| c == 4));
        // memoryless channel: branch gain is the input symbol
        for s in [0, 17, 1023] {
            for u in 0..4 {
                assert!((tr.branch_gain(s, u) - digit_symbol(u)).norm() < 1e-15);
            }
        }
        let a = tr.initial_alpha();
        assert_eq!(a[0], 0.0);
        assert!(a[1..].iter().all(|v| *v == f64::NEG_INFINITY));
        assert!(build_trellis(&unit_taps()[..1], &layout).is_err());
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..30 {
            let (taps, layout, obs) = random_instance(&mut rng, 2 + case % 2, 5, case % 3);
            let apri: Vec<f64> = if case % 2 == 0 {
                vec![]
            } else {
                (0..10).map(|_| rng.random_range(-3.0..3.0)).collect()
            };
            let tr = build_trellis(&taps, &layout).unwrap();
            let got = equalize(&tr, &obs, &apri, 0.7, 0.8, BcjrMode::Exact).unwrap();
            let want = brute_force(&taps, &layout, &obs, &apri, 0.7, 0.8);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "case {case}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn matched_filter_reduction() {
        let layout = TrellisLayout {
            prefix: vec![c(1.0, 0.0); 5],
            payload_len: 8,
            tail_len: 5,
        };
        let tr = build_trellis(&unit_taps(), &layout).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs: Vec<Complex64> = (0..13)
            .map(|_| c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
            .collect();
        let nv = 0.37;
        for mode in [BcjrMode::Exact, BcjrMode::MaxLog] {
            let llr = equalize(&tr, &obs, &[], 0.2, nv, mode).unwrap();
            for t in 0..8 {
                assert!((llr[2 * t] - 2.0 * SQRT_2 * obs[t].re / nv).abs() < 1e-6);
                assert!((llr[2 * t + 1] - 2.0 * SQRT_2 * obs[t].im / nv).abs() < 1e-6);
            }
            // sign symmetry
            let neg: Vec<Complex64> = obs.iter().map(|v| -v).collect();
            let llr_neg = equalize(&tr, &neg, &[], 0.2, nv, mode).unwrap();
            for (a, b) in llr.iter().zip(&llr_neg) {
                assert!((a + b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_weight_ignores_a_priori() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (taps, layout, obs) = random_instance(&mut rng, 6, 6, 5);
        let tr = build_trellis(&taps, &layout).unwrap();
        let apri: Vec<f64> = (0..12).map(|_| rng.random_range(-20.0..20.0)).collect();
        let a = equalize(&tr, &obs, &[], 0.0, 0.5, BcjrMode::MaxLog).unwrap();
        let b = equalize(&tr, &obs, &apri, 0.0, 0.5, BcjrMode::MaxLog).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn max_log_equals_exact_when_one_path_dominates() {
        // noiseless observation of a known sequence with a tiny noise variance
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let taps: Vec<Complex64> = vec![c(1.0, 0.2), c(0.5, -0.3), c(0.25, 0.1)];
        let layout = TrellisLayout {
            prefix: vec![c(1.0, 0.0), c(0.0, 1.0)],
            payload_len: 6,
            tail_len: 2,
        };
        let digits: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
        let sym = |pos: isize| -> Complex64 {
            if pos < 0 {
                layout.prefix[(layout.prefix.len() as isize + pos) as usize]
            } else if (pos as usize) < 6 {
                digit_symbol(digits[pos as usize])
            } else {
                c(0.0, 0.0)
            }
        };
        let obs: Vec<Complex64> = (0..8)
            .map(|t| (0..3).map(|l| taps[l] * sym(t as isize - l as isize)).sum())
            .collect();
        let tr = build_trellis(&taps, &layout).unwrap();
        let nv = 0.01;
        let exact = equalize(&tr, &obs, &[], 0.0, nv, BcjrMode::Exact).unwrap();
        let maxlog = equalize(&tr, &obs, &[], 0.0, nv, BcjrMode::MaxLog).unwrap();
        for (e, m) in exact.iter().zip(&maxlog) {
            assert!(m.abs() >= 30.0);
            assert!((e - m).abs() < 1e-6, "{e} vs {m}");
        }
    }

    #[test]
    fn a_priori_feedback_sharpens_neighbours() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let taps: Vec<Complex64> = vec![c(0.6, 0.0), c(0.7, 0.0), c(0.4, 0.0)];
        let layout = TrellisLayout {
            prefix: vec![c(1.0, 0.0); 2],
            payload_len: 6,
            tail_len: 2,
        };
        let digits: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
        let sym = |pos: isize| -> Complex64 {
            if pos < 0 {
                c(1.0, 0.0)
            } else if (pos as usize) < 6 {
                digit_symbol(digits[pos as usize])
            } else {
                c(0.0, 0.0)
            }
        };
        let nv = 0.8;
        let obs: Vec<Complex64> = (0..8)
            .map(|t| {
                let clean: Complex64 = (0..3).map(|l| taps[l] * sym(t as isize - l as isize)).sum();
                clean + c(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4))
            })
            .collect();
        let tr = build_trellis(&taps, &layout).unwrap();
        // perfect knowledge of symbol 2
        let mut apri = vec![0.0; 12];
        let d = digits[2];
        apri[4] = if d >> 1 == 0 { 60.0 } else { -60.0 };
        apri[5] = if d & 1 == 0 { 60.0 } else { -60.0 };
        let mut mags = Vec::new();
        for w in [0.0, 0.1, 0.2] {
            let l = equalize(&tr, &obs, &apri, w, nv, BcjrMode::MaxLog).unwrap();
            // bits of the neighbours (symbols 1 and 3), sign-corrected towards the truth
            let score: f64 = [1usize, 3]
                .iter()
                .flat_map(|&t| {
                    let dt = digits[t];
                    [
                        if dt >> 1 == 0 { l[2 * t] } else { -l[2 * t] },
                        if dt & 1 == 0 { l[2 * t + 1] } else { -l[2 * t + 1] },
                    ]
                })
                .sum();
            mags.push(score);
        }
        assert!(mags[0] <= mags[1] && mags[1] <= mags[2], "{mags:?}");
    }

    #[test]
    fn input_checks() {
        let layout = TrellisLayout {
            prefix: vec![],
            payload_len: 3,
            tail_len: 1,
        };
        let tr = build_trellis(&unit_taps(), &layout).unwrap();
        let obs = vec![c(0.0, 0.0); 4];
        assert!(equalize(&tr, &obs[..3], &[], 0.2, 1.0, BcjrMode::MaxLog).is_err());
        assert!(equalize(&tr, &obs, &[0.0; 5], 0.2, 1.0, BcjrMode::MaxLog).is_err());
        assert!(equalize(&tr, &obs, &[], 0.2, 0.0, BcjrMode::MaxLog).is_err());
    }
}
