//! Noiseless Boolean OR pooling and the erasure eavesdropper.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bits::BitRow;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Outcome vector seen by the lab.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PoolOutcomes {
    pub y: BitRow,
}

impl PoolOutcomes {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// `y(t) = OR_j rows[j](t)`.
pub fn pool(rows: &[BitRow]) -> Result<PoolOutcomes> {
    let first = rows
        .first()
        .ok_or_else(|| Error::invalid("pool needs at least one row"))?;
    let mut y = BitRow::zeros(first.len());
    for r in rows {
        if r.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                got: r.len(),
            });
        }
        y.or_assign_words(r.words());
    }
    Ok(PoolOutcomes { y })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observation {
    Zero,
    One,
    Erased,
}

impl Observation {
    /// Base-3 digit: 0, 1, or 2 for an erasure.
    pub fn digit(self) -> u8 {
        match self {
            Observation::Zero => 0,
            Observation::One => 1,
            Observation::Erased => 2,
        }
    }

    fn symbol(self) -> char {
        match self {
            Observation::Zero => '0',
            Observation::One => '1',
            Observation::Erased => 'e',
        }
    }
}

/// What the eavesdropper holds: every outcome either copied or erased.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EveView {
    z: Vec<Observation>,
}

impl EveView {
    /// Assemble a view from outcomes and an observation mask.
    pub fn from_mask(y: &PoolOutcomes, mask: &[bool]) -> Result<Self> {
        if mask.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                got: mask.len(),
            });
        }
        let z = mask
            .iter()
            .enumerate()
            .map(|(t, &seen)| match (seen, y.y.get(t)) {
                (false, _) => Observation::Erased,
                (true, true) => Observation::One,
                (true, false) => Observation::Zero,
            })
            .collect();
        Ok(Self { z })
    }

    pub fn symbols(&self) -> &[Observation] {
        &self.z
    }

    pub fn mask(&self) -> Vec<bool> {
        self.z.iter().map(|&o| o != Observation::Erased).collect()
    }

    pub fn observed(&self) -> usize {
        self.z.iter().filter(|&&o| o != Observation::Erased).count()
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Base-3 index with test `t` as digit `t` (least significant first).
    pub fn index(&self) -> u64 {
        self.z
            .iter()
            .rev()
            .fold(0u64, |acc, o| acc * 3 + o.digit() as u64)
    }

    /// True when no observed symbol contradicts `y`.
    pub fn consistent_with(&self, y: &PoolOutcomes) -> bool {
        self.z.len() == y.len()
            && self.z.iter().enumerate().all(|(t, o)| match o {
                Observation::Erased => true,
                Observation::One => y.y.get(t),
                Observation::Zero => !y.y.get(t),
            })
    }
}

impl fmt::Display for EveView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.z.iter().try_for_each(|o| write!(f, "{}", o.symbol()))
    }
}

impl FromStr for EveView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let z = s
            .chars()
            .map(|c| match c {
                '0' => Ok(Observation::Zero),
                '1' => Ok(Observation::One),
                'e' => Ok(Observation::Erased),
                other => Err(Error::Parse(format!("bad observation {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { z })
    }
}

/// Each outcome is seen independently with probability `delta`.
pub fn eavesdrop(y: &PoolOutcomes, delta: f64, seed: u64) -> Result<EveView> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must be in [0, 1), got {delta}")));
    }
    let mut rng = stream(seed, Domain::Eavesdropper, &[]);
    let mask: Vec<bool> = (0..y.len()).map(|_| rng.gen_bool(delta)).collect();
    EveView::from_mask(y, &mask)
}
