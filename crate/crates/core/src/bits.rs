//! Fixed-length bit strings packed into `u64` words (bit `t` lives in word
//! `t / 64`, position `t % 64`). Bits past the length are always zero.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_words(len: usize, words: &[u64]) -> Self {
        let mut row = Self {
            len,
            words: words[..words_for(len)].to_vec(),
        };
        row.mask_tail();
        row
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut row = Self::zeros(bits.len());
        for (t, &b) in bits.iter().enumerate() {
            row.set(t, b);
        }
        row
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, t: usize) -> bool {
        (self.words[t / 64] >> (t % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, t: usize, value: bool) {
        let bit = 1u64 << (t % 64);
        if value {
            self.words[t / 64] |= bit;
        } else {
            self.words[t / 64] &= !bit;
        }
    }

    pub fn or_assign_words(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a |= b;
        }
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|t| self.get(t)).collect()
    }

    /// Integer with bit `t` of the row at bit `t` (rows of at most 64 bits).
    pub fn as_u64(&self) -> u64 {
        debug_assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }
}

/// True when every 1 of `row` is also a 1 of `cover`.
#[inline]
pub fn is_covered(row: &[u64], cover: &[u64]) -> bool {
    row.iter().zip(cover).all(|(r, c)| r & !c == 0)
}

impl fmt::Display for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in 0..self.len {
            f.write_str(if self.get(t) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitRow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("bad bit {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(Self::from_bools(&bits))
    }
}
