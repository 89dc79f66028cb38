//! K-subsets of `0..n` and their colexicographic ranking.

use std::fmt;

use crate::error::{Error, Result};

/// C(n, k) if it fits in a u128.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// C(n, k) as a u64, or an error when it overflows.
pub fn binomial_u64(n: u64, k: u64) -> Result<u64> {
    binomial(n, k)
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| Error::invalid(format!("C({n},{k}) overflows u64")))
}

/// Index `w` of a defective set together with the set itself.
///
/// The enumeration is colexicographic: `w = Σ_i C(items[i], i + 1)` over
/// the sorted items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DefectiveIndex {
    w: u64,
    items: Vec<usize>,
}

impl DefectiveIndex {
    pub fn from_rank(w: u64, n: usize, k: usize) -> Result<Self> {
        let total = binomial_u64(n as u64, k as u64)?;
        if w >= total {
            return Err(Error::IndexOutOfRange {
                what: "defective index",
                index: w,
                limit: total,
            });
        }
        let mut items = vec![0usize; k];
        let mut rest = w;
        let mut upper = n;
        for i in (0..k).rev() {
            // largest c < upper with C(c, i + 1) <= rest
            let mut c = upper - 1;
            loop {
                let b = binomial(c as u64, i as u64 + 1).unwrap() as u64;
                if b <= rest {
                    rest -= b;
                    break;
                }
                c -= 1;
            }
            items[i] = c;
            upper = c;
        }
        Ok(Self { w, items })
    }

    pub fn from_items(mut items: Vec<usize>, n: usize) -> Result<Self> {
        items.sort_unstable();
        if items.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::invalid("defective items must be distinct"));
        }
        if let Some(&last) = items.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange {
                    what: "item",
                    index: last as u64,
                    limit: n as u64,
                });
            }
        }
        let w = colex_rank(&items);
        Ok(Self { w, items })
    }

    pub fn rank(&self) -> u64 {
        self.w
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

impl fmt::Display for DefectiveIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.w)
    }
}

pub fn colex_rank(sorted: &[usize]) -> u64 {
    sorted
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c as u64, i as u64 + 1).unwrap() as u64)
        .sum()
}

/// Iterator over the K-subsets of `0..n` in colex order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        let mut i = 0;
        loop {
            if i == k {
                self.done = true;
                break;
            }
            let limit = if i + 1 < k { self.current[i + 1] } else { self.n };
            if self.current[i] + 1 < limit {
                self.current[i] += 1;
                for (r, slot) in self.current[..i].iter_mut().enumerate() {
                    *slot = r;
                }
                break;
            }
            i += 1;
        }
        Some(out)
    }
}
