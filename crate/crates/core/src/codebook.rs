//! Per-item bins of random codewords.
//!
//! Item `j` owns `M` sub-bins of `F` codewords each; the mixer picks the
//! sub-bin with private randomness and the codeword inside it with the shared
//! key. Every entry is Bernoulli(ln 2 / K), drawn from a stream keyed by
//! `(seed, j, m, f)` at position `t`.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::bits::{words_for, BitRow};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

pub const DEFAULT_EPS_SEC: f64 = 0.05;
pub const DEFAULT_BUDGET_BITS: u64 = 1 << 31;

/// Tolerance used when flooring rate products such as `T·R_f/K`, so that
/// values like `40 · 0.2 / 2` land on 4 and not 3.
const FLOOR_SLACK: f64 = 1e-9;

pub(crate) fn floor_exponent(x: f64) -> u32 {
    if x <= 0.0 {
        0
    } else {
        (x + FLOOR_SLACK).floor().min(u32::MAX as f64) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookParams {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub delta: f64,
    pub rf: f64,
    pub eps_sec: f64,
    pub seed: u64,
}

impl CodebookParams {
    pub fn new(n: usize, k: usize, t: usize, delta: f64, rf: f64) -> Self {
        Self {
            n,
            k,
            t,
            delta,
            rf,
            eps_sec: DEFAULT_EPS_SEC,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eps_sec(mut self, eps_sec: f64) -> Self {
        self.eps_sec = eps_sec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::invalid(format!(
                "need 1 <= K <= N, got K = {}, N = {}",
                self.k, self.n
            )));
        }
        if self.t == 0 {
            return Err(Error::invalid("T must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::invalid(format!("delta must be in [0, 1), got {}", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.rf) {
            return Err(Error::invalid(format!("Rf must be in [0, 1], got {}", self.rf)));
        }
        if !(self.eps_sec >= 0.0 && self.eps_sec.is_finite()) {
            return Err(Error::invalid(format!("eps_sec must be >= 0, got {}", self.eps_sec)));
        }
        Ok(())
    }

    /// Bernoulli parameter ln 2 / K of every codebook entry.
    pub fn p(&self) -> f64 {
        std::f64::consts::LN_2 / self.k as f64
    }

    pub fn shape(&self) -> Shape {
        derive_mf(self)
    }
}

/// Bin geometry derived from the rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    /// Sub-bins per item.
    pub m: u64,
    /// Codewords per sub-bin.
    pub f: u64,
    /// Bits per key chunk, `log2 F`.
    pub key_bits: u32,
    pub m_bits: u32,
    /// Feedback bits available per round, `⌊T·R_f⌋`.
    pub feedback_bits: u32,
}

fn pow2_saturating(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        1u64 << bits
    }
}

/// `F = 2^⌊T·R_f/K⌋`, `M = 2^⌊T(δ − R_f − ε)/K⌋` (exponent clamped at 0).
pub fn derive_mf(params: &CodebookParams) -> Shape {
    let t = params.t as f64;
    let k = params.k as f64;
    let key_bits = floor_exponent(t * params.rf / k);
    let m_bits = floor_exponent(t * (params.delta - params.rf - params.eps_sec) / k);
    Shape {
        m: pow2_saturating(m_bits),
        f: pow2_saturating(key_bits),
        key_bits,
        m_bits,
        feedback_bits: floor_exponent(t * params.rf),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    params: CodebookParams,
    m: usize,
    f: usize,
    key_bits: u32,
    words: usize,
    bits: Vec<u64>,
}

impl Codebook {
    pub fn generate(params: &CodebookParams) -> Result<Self> {
        Self::generate_with_budget(params, DEFAULT_BUDGET_BITS)
    }

    pub fn generate_with_budget(params: &CodebookParams, budget_bits: u64) -> Result<Self> {
        params.validate()?;
        let shape = derive_mf(params);
        Self::generate_shape(params, shape.m, shape.f, shape.key_bits, budget_bits)
    }

    /// Generate with an explicit geometry (used by the first round and the
    /// column variant, where `F` is forced to 1).
    pub fn generate_shape(
        params: &CodebookParams,
        m: u64,
        f: u64,
        key_bits: u32,
        budget_bits: u64,
    ) -> Result<Self> {
        params.validate()?;
        let total = params.n as f64 * m as f64 * f as f64 * params.t as f64;
        if total > budget_bits as f64 {
            return Err(Error::BudgetExceeded {
                what: "codebook bits N*M*F*T",
                needed: total,
                cap: budget_bits as f64,
            });
        }
        let (m, f) = (m as usize, f as usize);
        let words = words_for(params.t);
        let per_item = m * f * words;
        let mut bits = vec![0u64; params.n * per_item];
        let p = params.p();
        let t_len = params.t;
        let seed = params.seed;
        bits.par_chunks_mut(per_item.max(1))
            .enumerate()
            .for_each(|(j, bin)| {
                for sub in 0..m {
                    for key in 0..f {
                        let mut rng = stream(seed, Domain::Codebook, &[j as u64, sub as u64, key as u64]);
                        let row = &mut bin[(sub * f + key) * words..][..words];
                        for t in 0..t_len {
                            if rng.gen_bool(p) {
                                row[t / 64] |= 1 << (t % 64);
                            }
                        }
                    }
                }
            });
        let cb = Self {
            params: *params,
            m,
            f,
            key_bits,
            words,
            bits,
        };
        cb.check_density()?;
        Ok(cb)
    }

    /// Build from explicit codewords, listed item-major then sub-bin then key.
    pub fn from_rows(
        params: &CodebookParams,
        m: usize,
        f: usize,
        rows: &[BitRow],
    ) -> Result<Self> {
        if rows.len() != params.n * m * f {
            return Err(Error::LengthMismatch {
                expected: params.n * m * f,
                got: rows.len(),
            });
        }
        let words = words_for(params.t);
        let mut bits = Vec::with_capacity(rows.len() * words);
        for r in rows {
            if r.len() != params.t {
                return Err(Error::LengthMismatch {
                    expected: params.t,
                    got: r.len(),
                });
            }
            bits.extend_from_slice(r.words());
        }
        if !f.is_power_of_two() || !m.is_power_of_two() {
            return Err(Error::invalid("M and F must be powers of two"));
        }
        Ok(Self {
            params: *params,
            m,
            f,
            key_bits: f.trailing_zeros(),
            words,
            bits,
        })
    }

    /// Ones must fall within 5 standard deviations of `p · N·M·F·T`.
    fn check_density(&self) -> Result<()> {
        let total = (self.n() * self.m * self.f * self.t()) as f64;
        if total == 0.0 {
            return Ok(());
        }
        let ones: u64 = self.bits.iter().map(|w| w.count_ones() as u64).sum();
        let p = self.params.p();
        let sigma = (total * p * (1.0 - p)).sqrt();
        let dev = (ones as f64 - total * p).abs();
        if sigma > 0.0 && dev > 5.0 * sigma {
            return Err(Error::Invariant(format!(
                "codebook density {:.4} deviates from p = {p:.4} by {:.1} sigma",
                ones as f64 / total,
                dev / sigma
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> &CodebookParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn t(&self) -> usize {
        self.params.t
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    #[inline]
    pub(crate) fn row_unchecked(&self, j: usize, m: usize, f: usize) -> &[u64] {
        let idx = (j * self.m + m) * self.f + f;
        &self.bits[idx * self.words..][..self.words]
    }

    /// Packed codeword `bins[j][m][f]`.
    pub fn row(&self, j: usize, m: usize, f: usize) -> Result<&[u64]> {
        for (what, index, limit) in [("item", j, self.n()), ("sub-bin", m, self.m), ("key", f, self.f)] {
            if index >= limit {
                return Err(Error::IndexOutOfRange {
                    what,
                    index: index as u64,
                    limit: limit as u64,
                });
            }
        }
        Ok(self.row_unchecked(j, m, f))
    }

    pub fn row_bits(&self, j: usize, m: usize, f: usize) -> Result<BitRow> {
        Ok(BitRow::from_words(self.t(), self.row(j, m, f)?))
    }

    pub fn ones(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// The first `m` sub-bins and first `f` keys of every bin, as a codebook
    /// of its own.
    pub fn restrict(&self, m: usize, f: usize) -> Result<Self> {
        if m == 0 || f == 0 || m > self.m || f > self.f {
            return Err(Error::invalid(format!(
                "cannot restrict {}x{} bins to {m}x{f}",
                self.m, self.f
            )));
        }
        let mut rows = Vec::with_capacity(self.n() * m * f);
        for j in 0..self.n() {
            for a in 0..m {
                for b in 0..f {
                    rows.push(BitRow::from_words(self.t(), self.row_unchecked(j, a, b)));
                }
            }
        }
        let mut params = self.params;
        params.rf = 0.0;
        Self::from_rows(&params, m, f, &rows)
    }

    /// Header `N, M, F, T` as little-endian u32, then all codeword bits
    /// row-major (item, sub-bin, key, test), packed MSB-first with no row
    /// padding.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for v in [self.n(), self.m, self.f, self.t()] {
            let v = u32::try_from(v).map_err(|_| Error::invalid("dimension exceeds u32"))?;
            out.write_all(&v.to_le_bytes())?;
        }
        let mut byte = 0u8;
        let mut filled = 0;
        for j in 0..self.n() {
            for a in 0..self.m {
                for b in 0..self.f {
                    let row = self.row_unchecked(j, a, b);
                    for t in 0..self.t() {
                        byte = (byte << 1) | ((row[t / 64] >> (t % 64)) & 1) as u8;
                        filled += 1;
                        if filled == 8 {
                            out.write_all(&[byte])?;
                            byte = 0;
                            filled = 0;
                        }
                    }
                }
            }
        }
        if filled > 0 {
            out.write_all(&[byte << (8 - filled)])?;
        }
        Ok(())
    }

    /// Read the codeword bits of a dump back as `(N, M, F, T, rows)`.
    pub fn read_dump<R: Read>(mut input: R) -> Result<(usize, usize, usize, usize, Vec<BitRow>)> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        let dim = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        let (n, m, f, t) = (dim(0), dim(1), dim(2), dim(3));
        let mut body = Vec::new();
        input.read_to_end(&mut body)?;
        let total = n * m * f * t;
        if body.len() != total.div_ceil(8) {
            return Err(Error::LengthMismatch {
                expected: total.div_ceil(8),
                got: body.len(),
            });
        }
        let bit = |i: usize| (body[i / 8] >> (7 - i % 8)) & 1 == 1;
        let rows = (0..n * m * f)
            .map(|r| BitRow::from_bools(&(0..t).map(|c| bit(r * t + c)).collect::<Vec<_>>()))
            .collect();
        Ok((n, m, f, t, rows))
    }
}
