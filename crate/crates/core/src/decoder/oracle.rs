//! Brute-force reference decoder for cross-checking `decode` on tiny
//! instances. It walks subsets by rank, builds every OR as a plain
//! `Vec<bool>`, never prunes and never stops early.

use std::collections::BTreeSet;

use super::{check_inputs, search_size, DecodeResult, DecodeStatus};
use crate::channel::PoolOutcomes;
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::subset::{binomial_u64, DefectiveIndex};

pub const ORACLE_LIMIT: f64 = 1e6;

pub fn decode_oracle(cb: &Codebook, f_indices: &[usize], y: &PoolOutcomes) -> Result<DecodeResult> {
    check_inputs(cb, f_indices, y)?;
    let (n, k, m, t) = (cb.n(), cb.k(), cb.m(), cb.t());
    let size = search_size(n, k, m);
    if size > ORACLE_LIMIT {
        return Err(Error::BudgetExceeded {
            what: "oracle search",
            needed: size,
            cap: ORACLE_LIMIT,
        });
    }
    let target = y.y.to_bools();
    let vectors = (m as u64).pow(k as u32);
    let mut consistent = BTreeSet::new();
    let mut first_subs: Option<Vec<usize>> = None;
    let mut count = 0u64;

    for w in 0..binomial_u64(n as u64, k as u64)? {
        let set = DefectiveIndex::from_rank(w, n, k)?;
        for v in 0..vectors {
            let subs: Vec<usize> = (0..k)
                .map(|i| ((v / (m as u64).pow(i as u32)) % m as u64) as usize)
                .collect();
            let mut or = vec![false; t];
            for (&item, &sub) in set.items().iter().zip(&subs) {
                let row = cb.row_bits(item, sub, f_indices[item])?.to_bools();
                for (o, r) in or.iter_mut().zip(row) {
                    *o = *o || r;
                }
            }
            if or == target {
                count += 1;
                if consistent.is_empty() {
                    first_subs = Some(subs);
                }
                consistent.insert(w);
            }
        }
    }

    let status = match consistent.len() {
        0 => DecodeStatus::Inconsistent,
        1 => DecodeStatus::Unique,
        _ => DecodeStatus::Ambiguous,
    };
    let w_hat = match status {
        DecodeStatus::Unique => Some(DefectiveIndex::from_rank(
            *consistent.iter().next().unwrap(),
            n,
            k,
        )?),
        _ => None,
    };
    Ok(DecodeResult {
        status,
        sub_bins: w_hat.as_ref().and(first_subs),
        w_hat,
        candidates: count,
    })
}
