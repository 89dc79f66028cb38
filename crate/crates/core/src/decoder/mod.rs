//! Legitimate decoding over the noiseless OR channel.
//!
//! With no noise the likelihood of a candidate (subset, sub-bin vector) is 1
//! when the OR of its rows reproduces `y` exactly and 0 otherwise, so
//! maximum-likelihood decoding is an exhaustive consistency search. The
//! key indices are known to the lab and held fixed; only sub-bins vary.

mod oracle;

pub use oracle::decode_oracle;

use crate::bits::{is_covered, BitRow};
use crate::channel::PoolOutcomes;
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::subset::{binomial, Combinations, DefectiveIndex};

pub const DEFAULT_DECODE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Unique,
    Ambiguous,
    Inconsistent,
}

impl DecodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeStatus::Unique => "unique",
            DecodeStatus::Ambiguous => "ambiguous",
            DecodeStatus::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub status: DecodeStatus,
    /// Present exactly when the status is `Unique`.
    pub w_hat: Option<DefectiveIndex>,
    /// Sub-bin choice of the first consistent candidate of `w_hat`.
    pub sub_bins: Option<Vec<usize>>,
    /// Consistent (subset, sub-bin vector) pairs seen before the search ended.
    pub candidates: u64,
}

impl DecodeResult {
    pub fn is_correct(&self, truth: &DefectiveIndex) -> bool {
        self.status == DecodeStatus::Unique && self.w_hat.as_ref() == Some(truth)
    }
}

/// Size of the unpruned search space, `C(N, K) · M^K`.
pub fn search_size(n: usize, k: usize, m: usize) -> f64 {
    let subsets = binomial(n as u64, k as u64).map_or(f64::INFINITY, |v| v as f64);
    subsets * (m as f64).powi(k as i32)
}

pub(crate) fn check_inputs(cb: &Codebook, f_indices: &[usize], y: &PoolOutcomes) -> Result<()> {
    if f_indices.len() != cb.n() {
        return Err(Error::LengthMismatch {
            expected: cb.n(),
            got: f_indices.len(),
        });
    }
    if y.len() != cb.t() {
        return Err(Error::LengthMismatch {
            expected: cb.t(),
            got: y.len(),
        });
    }
    if let Some(&bad) = f_indices.iter().find(|&&f| f >= cb.f()) {
        return Err(Error::IndexOutOfRange {
            what: "key index",
            index: bad as u64,
            limit: cb.f() as u64,
        });
    }
    Ok(())
}

/// Exhaustive consistency decoding. Subsets are visited in colex order and
/// sub-bin vectors in odometer order; the search stops at the second
/// distinct consistent subset.
pub fn decode(cb: &Codebook, f_indices: &[usize], y: &PoolOutcomes, budget: u64) -> Result<DecodeResult> {
    check_inputs(cb, f_indices, y)?;
    let (n, k, m) = (cb.n(), cb.k(), cb.m());
    let size = search_size(n, k, m);
    if size > budget as f64 {
        return Err(Error::BudgetExceeded {
            what: "decoder search C(N,K)*M^K",
            needed: size,
            cap: budget as f64,
        });
    }
    let target = y.y.words();

    // A row with a 1 where y has a 0 can never be part of a consistent set.
    let mut items = Vec::new();
    let mut options: Vec<Vec<(usize, &[u64])>> = Vec::new();
    for (j, &f) in f_indices.iter().enumerate() {
        let rows: Vec<(usize, &[u64])> = (0..m)
            .map(|sub| (sub, cb.row_unchecked(j, sub, f)))
            .filter(|(_, row)| is_covered(row, target))
            .collect();
        if !rows.is_empty() {
            items.push(j);
            options.push(rows);
        }
    }

    let mut candidates = 0u64;
    let mut found: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut acc = BitRow::zeros(cb.t());
    let mut odometer = vec![0usize; k];

    for subset in Combinations::new(items.len(), k) {
        odometer.iter_mut().for_each(|d| *d = 0);
        'vectors: loop {
            acc.clear();
            for (&pos, &digit) in subset.iter().zip(&odometer) {
                acc.or_assign_words(options[pos][digit].1);
            }
            if acc.words() == target {
                candidates += 1;
                let chosen: Vec<usize> = subset.iter().map(|&p| items[p]).collect();
                match &found {
                    None => {
                        let subs = subset.iter().zip(&odometer).map(|(&p, &d)| options[p][d].0).collect();
                        found = Some((chosen, subs));
                    }
                    Some((first, _)) if *first != chosen => {
                        return Ok(DecodeResult {
                            status: DecodeStatus::Ambiguous,
                            w_hat: None,
                            sub_bins: None,
                            candidates,
                        });
                    }
                    Some(_) => {}
                }
            }
            for (i, &pos) in subset.iter().enumerate() {
                odometer[i] += 1;
                if odometer[i] < options[pos].len() {
                    continue 'vectors;
                }
                odometer[i] = 0;
            }
            break;
        }
    }

    Ok(match found {
        Some((items, subs)) => DecodeResult {
            status: DecodeStatus::Unique,
            w_hat: Some(DefectiveIndex::from_items(items, n)?),
            sub_bins: Some(subs),
            candidates,
        },
        None => DecodeResult {
            status: DecodeStatus::Inconsistent,
            w_hat: None,
            sub_bins: None,
            candidates,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::CodebookParams;

    fn book(n: usize, k: usize, m: usize, f: usize, rows: &[&str]) -> Codebook {
        let t = rows[0].len();
        let p = CodebookParams::new(n, k, t, 0.0, 0.0);
        let rows: Vec<BitRow> = rows.iter().map(|r| r.parse().unwrap()).collect();
        Codebook::from_rows(&p, m, f, &rows).unwrap()
    }

    fn outcome(s: &str) -> PoolOutcomes {
        PoolOutcomes { y: s.parse().unwrap() }
    }

    #[test]
    fn unique_single_defective() {
        let cb = book(2, 1, 1, 1, &["101", "011"]);
        let r = decode(&cb, &[0, 0], &outcome("101"), DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(r.status, DecodeStatus::Unique);
        assert_eq!(r.w_hat.unwrap().items(), &[0]);
    }

    #[test]
    fn identical_rows_are_ambiguous() {
        let cb = book(2, 1, 1, 1, &["101", "101"]);
        let r = decode(&cb, &[0, 0], &outcome("101"), DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(r.status, DecodeStatus::Ambiguous);
        assert!(r.w_hat.is_none());
    }

    #[test]
    fn unreachable_outcome_is_inconsistent() {
        let cb = book(2, 1, 1, 1, &["101", "011"]);
        let r = decode(&cb, &[0, 0], &outcome("111"), DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(r.status, DecodeStatus::Inconsistent);
        assert_eq!(r.candidates, 0);
    }

    #[test]
    fn key_index_selects_codeword() {
        // item 0: f=0 "1100", f=1 "0011"; item 1: f=0 "1000", f=1 "0100"
        let cb = book(2, 1, 1, 2, &["1100", "0011", "1000", "0100"]);
        let r = decode(&cb, &[1, 0], &outcome("0011"), DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(r.w_hat.unwrap().items(), &[0]);
        let r = decode(&cb, &[0, 0], &outcome("0011"), DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(r.status, DecodeStatus::Inconsistent);
    }

    #[test]
    fn sub_bin_search_and_soundness() {
        // K = 2, M = 2: defectives 0 (sub-bin 1) and 2 (sub-bin 0)
        let cb = book(
            3,
            2,
            2,
            1,
            &["100000", "010000", "001000", "000100", "000010", "000001"],
        );
        let r = decode(&cb, &[0; 3], &outcome("010010"), DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(r.status, DecodeStatus::Unique);
        assert_eq!(r.w_hat.unwrap().items(), &[0, 2]);
        assert_eq!(r.sub_bins.unwrap(), vec![1, 0]);
    }

    #[test]
    fn input_validation() {
        let cb = book(2, 1, 1, 1, &["101", "011"]);
        assert!(decode(&cb, &[0], &outcome("101"), 10).is_err());
        assert!(decode(&cb, &[0, 1], &outcome("101"), 10).is_err());
        assert!(decode(&cb, &[0, 0], &outcome("10"), 10).is_err());
        assert!(matches!(
            decode(&cb, &[0, 0], &outcome("101"), 1).unwrap_err(),
            Error::BudgetExceeded { .. }
        ));
    }
}
