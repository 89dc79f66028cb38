//! MDS generator matrices and key expansion.
//!
//! A `K × N` Vandermonde matrix over GF(2^m) with distinct evaluation points
//! has every `K × K` column submatrix invertible. Multiplying `K` uniform
//! source keys by it yields `N` keys of which any `K` are again jointly
//! uniform.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf::{degree_for, GaloisField, MAX_DEGREE};
use crate::subset::Combinations;

/// Evaluation point of one generator column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Point {
    Finite(u16),
    /// Column `(0, …, 0, 1)`, used by the doubly extended construction.
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsGenerator {
    k: usize,
    n: usize,
    degree: u32,
    points: Option<Vec<Point>>,
    entries: Vec<u16>,
}

/// The generator used for `K` source keys and `N` expanded keys: Vandermonde
/// over the smallest GF(2^m) with `2^m ≥ N`, evaluated at `1, 2, …, 2^m - 1`
/// followed by `0` when all `2^m` points are needed.
pub fn mds_generator(k: usize, n: usize) -> Result<MdsGenerator> {
    MdsGenerator::vandermonde(k, n, degree_for(n))
}

impl MdsGenerator {
    /// Vandermonde generator over GF(2^m). Supports `N ≤ 2^m + 1`; the
    /// `(2^m + 1)`-th column is the point at infinity. With `K = 1` any `N` is
    /// accepted and the single row is all ones.
    pub fn vandermonde(k: usize, n: usize, m: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if k > n {
            return Err(Error::invalid(format!("K = {k} exceeds N = {n}")));
        }
        let field = GaloisField::get(m)?;
        let q = field.size() as usize;
        if k > 1 && n > q + 1 {
            return Err(Error::invalid(format!(
                "N = {n} needs more than 2^{m} + 1 evaluation points"
            )));
        }
        let points: Vec<Point> = (0..n)
            .map(|c| match c {
                c if k == 1 => Point::Finite(((c % (q - 1)) + 1) as u16),
                c if c < q - 1 => Point::Finite(c as u16 + 1),
                c if c == q - 1 => Point::Finite(0),
                _ => Point::Infinity,
            })
            .collect();
        let mut entries = vec![0u16; k * n];
        for (c, p) in points.iter().enumerate() {
            for r in 0..k {
                entries[r * n + c] = match *p {
                    Point::Finite(x) => field.pow(x, r as u32),
                    Point::Infinity => (r == k - 1) as u16,
                };
            }
        }
        Ok(Self {
            k,
            n,
            degree: m,
            points: Some(points),
            entries,
        })
    }

    pub fn from_entries(k: usize, n: usize, degree: u32, entries: Vec<u16>) -> Result<Self> {
        let field = GaloisField::get(degree)?;
        if entries.len() != k * n {
            return Err(Error::LengthMismatch {
                expected: k * n,
                got: entries.len(),
            });
        }
        if let Some(&bad) = entries.iter().find(|&&e| e as u32 >= field.size()) {
            return Err(Error::IndexOutOfRange {
                what: "generator entry",
                index: bad as u64,
                limit: field.size() as u64,
            });
        }
        Ok(Self {
            k,
            n,
            degree,
            points: None,
            entries,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn entry(&self, row: usize, col: usize) -> u16 {
        self.entries[row * self.n + col]
    }

    pub fn entries(&self) -> &[u16] {
        &self.entries
    }

    pub fn points(&self) -> Option<&[Point]> {
        self.points.as_deref()
    }

    /// Overwrite one entry. Intended for negative controls in self-checks.
    pub fn set_entry(&mut self, row: usize, col: usize, value: u16) {
        self.entries[row * self.n + col] = value;
        self.points = None;
    }

    /// `K × K` submatrix formed by the chosen columns.
    pub fn submatrix(&self, cols: &[usize]) -> Vec<u16> {
        let mut out = Vec::with_capacity(self.k * cols.len());
        for r in 0..self.k {
            out.extend(cols.iter().map(|&c| self.entry(r, c)));
        }
        out
    }

    /// Column subsets whose submatrix is singular.
    pub fn singular_subsets(&self) -> Vec<Vec<usize>> {
        let field = GaloisField::get(self.degree).expect("degree validated at construction");
        Combinations::new(self.n, self.k)
            .filter(|cols| field.rank(&self.submatrix(cols), self.k, self.k) < self.k)
            .collect()
    }

    pub fn is_mds(&self) -> bool {
        self.singular_subsets().is_empty()
    }

    /// The same evaluation points read in GF(2^w).
    fn lift(&self, w: u32) -> Result<Self> {
        if w == self.degree {
            return Ok(self.clone());
        }
        if self.k == 1 {
            return Self::vandermonde(1, self.n, w);
        }
        let points = self.points.as_ref().ok_or_else(|| {
            Error::invalid("generator has no evaluation points; cannot change field degree")
        })?;
        let field = GaloisField::get(w)?;
        let mut entries = vec![0u16; self.k * self.n];
        for (c, p) in points.iter().enumerate() {
            for r in 0..self.k {
                entries[r * self.n + c] = match *p {
                    Point::Finite(x) if (x as u32) < field.size() => field.pow(x, r as u32),
                    Point::Finite(x) => {
                        return Err(Error::invalid(format!("point {x} not in GF(2^{w})")))
                    }
                    Point::Infinity => (r == self.k - 1) as u16,
                };
            }
        }
        Ok(Self {
            k: self.k,
            n: self.n,
            degree: w,
            points: self.points.clone(),
            entries,
        })
    }

    /// Plain-text form: a `K N m` header, then `K` rows of entries.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.k, self.n, self.degree);
        for r in 0..self.k {
            let row: Vec<String> = (0..self.n).map(|c| self.entry(r, c).to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty generator".into()))?;
        let nums: Vec<u64> = parse_ints(header)?;
        let [k, n, m] = nums[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let (k, n, m) = (k as usize, n as usize, m as u32);
        let mut entries = Vec::with_capacity(k * n);
        for r in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
            let row = parse_ints(line)?;
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            entries.extend(row.into_iter().map(|v| v as u16));
        }
        let mut g = Self::from_entries(k, n, m, entries)?;
        // Recover the evaluation points when the matrix is one of ours.
        if let Ok(v) = Self::vandermonde(k, n, m) {
            if v.entries == g.entries {
                g.points = v.points;
            }
        }
        Ok(g)
    }
}

fn parse_ints(line: &str) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect()
}

/// A key as a big-endian bit string.
pub type KeyChunk = Vec<bool>;

#[derive(Debug, Clone)]
struct Segment {
    start: usize,
    width: usize,
    /// Bits actually carried when the symbol is zero-padded.
    carried: usize,
    generator: MdsGenerator,
}

/// How `S_K`-bit keys are cut into field symbols for a given generator.
///
/// When `S_K ≥ m` the key is split into `⌊S_K/m⌋` symbols whose widths are
/// all at least `m`; each symbol is expanded in its own GF(2^width) with the
/// generator's evaluation points, so any `K` outputs are a bijective image of
/// the sources. Shorter keys use GF(2^S_K) directly when the doubly extended
/// code is long enough, and otherwise fall back to zero-padding one
/// `m`-bit symbol and truncating the result, which is linear but not
/// uniformity-preserving.
#[derive(Debug, Clone)]
pub struct KeyLayout {
    k: usize,
    n: usize,
    segments: Vec<Segment>,
    exact: bool,
    key_bits: usize,
}

impl KeyLayout {
    pub fn new(g: &MdsGenerator, key_bits: usize) -> Result<Self> {
        let (k, n, m) = (g.k, g.n, g.degree as usize);
        let mut segments = Vec::new();
        let mut exact = true;
        if key_bits == 0 {
        } else if k == 1 {
            let mut start = 0;
            while start < key_bits {
                let width = (key_bits - start).min(MAX_DEGREE as usize);
                segments.push(Segment {
                    start,
                    width,
                    carried: width,
                    generator: g.lift(width as u32)?,
                });
                start += width;
            }
        } else if key_bits >= m {
            let count = key_bits / m;
            let base = key_bits / count;
            let extra = key_bits % count;
            let mut start = 0;
            for i in 0..count {
                let width = base + usize::from(i < extra);
                if width > MAX_DEGREE as usize {
                    return Err(Error::UnsupportedDegree(width as u32));
                }
                segments.push(Segment {
                    start,
                    width,
                    carried: width,
                    generator: g.lift(width as u32)?,
                });
                start += width;
            }
        } else if n <= (1usize << key_bits) + 1 {
            segments.push(Segment {
                start: 0,
                width: key_bits,
                carried: key_bits,
                generator: MdsGenerator::vandermonde(k, n, key_bits as u32)?,
            });
        } else {
            exact = false;
            segments.push(Segment {
                start: 0,
                width: m,
                carried: key_bits,
                generator: g.clone(),
            });
        }
        Ok(Self {
            k,
            n,
            segments,
            exact,
            key_bits,
        })
    }

    /// True when any `K` expanded keys are a bijective image of the sources.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn key_bits(&self) -> usize {
        self.key_bits
    }

    /// Symbol widths in order.
    pub fn widths(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.width).collect()
    }

    pub fn expand(&self, source: &[KeyChunk]) -> Result<Vec<KeyChunk>> {
        let (k, n) = (self.k, self.n);
        if source.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: source.len(),
            });
        }
        if let Some(bad) = source.iter().find(|c| c.len() != self.key_bits) {
            return Err(Error::LengthMismatch {
                expected: self.key_bits,
                got: bad.len(),
            });
        }
        let mut out = vec![vec![false; self.key_bits]; n];
        let mut symbols = vec![0u16; k];
        for seg in &self.segments {
            let field = GaloisField::get(seg.width as u32)?;
            for (sym, chunk) in symbols.iter_mut().zip(source) {
                let mut v = 0u16;
                for b in 0..seg.width {
                    let bit = b < seg.carried && chunk[seg.start + b];
                    v = (v << 1) | bit as u16;
                }
                *sym = v;
            }
            for (j, key) in out.iter_mut().enumerate() {
                let mut acc = 0u16;
                for (r, &s) in symbols.iter().enumerate() {
                    acc ^= field.mul(s, seg.generator.entry(r, j));
                }
                for b in 0..seg.carried {
                    key[seg.start + b] = (acc >> (seg.width - 1 - b)) & 1 == 1;
                }
            }
        }
        Ok(out)
    }
}

/// Expand `K` equal-length source keys into `N` keys through `g`.
pub fn expand_keys(source: &[KeyChunk], g: &MdsGenerator) -> Result<Vec<KeyChunk>> {
    if source.len() != g.k {
        return Err(Error::LengthMismatch {
            expected: g.k,
            got: source.len(),
        });
    }
    let bits = source.first().map_or(0, Vec::len);
    if let Some(bad) = source.iter().find(|c| c.len() != bits) {
        return Err(Error::LengthMismatch {
            expected: bits,
            got: bad.len(),
        });
    }
    KeyLayout::new(g, bits)?.expand(source)
}

/// Big-endian integer value of a bit string (at most 64 bits).
pub fn key_value(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

pub fn key_from_value(value: u64, bits: usize) -> KeyChunk {
    (0..bits).rev().map(|i| (value >> i) & 1 == 1).collect()
}
