//! Closed-form test-count bounds (all logarithms base 2).
//!
//! Values are kept real-valued for comparisons; [`Bound::tests`] applies the
//! ceiling only when a count is reported.

use std::collections::HashMap;
use std::fmt::Write as _;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::subset::binomial;

pub const MI_MAX_K: usize = 20;
const CEIL_SLACK: f64 = 1e-9;

/// log2 C(n, k); `-inf` when `k > n`. Exact integer path for `n ≤ 60`.
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n <= 60 {
        return (binomial(n, k).unwrap() as f64).log2();
    }
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
        / std::f64::consts::LN_2
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn entropy<K>(dist: &HashMap<K, f64>) -> f64 {
    dist.values()
        .filter(|&&q| q > 0.0)
        .map(|&q| -q * q.log2())
        .sum()
}

/// `I(X_{S1}; X_{S2}, Y)` for one test: `K` i.i.d. Bernoulli(p) inputs, `Y`
/// their OR, `S1` the first `i` of them. Computed by enumerating all `2^K`
/// input patterns.
pub fn mi_boolean(k: usize, i: usize, p: f64) -> Result<f64> {
    if k > MI_MAX_K {
        return Err(Error::BudgetExceeded {
            what: "mutual information enumeration 2^K",
            needed: 2f64.powi(k as i32),
            cap: 2f64.powi(MI_MAX_K as i32),
        });
    }
    if i == 0 || i > k {
        return Err(Error::invalid(format!("need 1 <= i <= K, got i = {i}, K = {k}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must be in (0, 1), got {p}")));
    }
    let s1_mask = (1u32 << i) - 1;
    let mut joint = HashMap::new();
    let mut s1 = HashMap::new();
    let mut s2y = HashMap::new();
    for x in 0u32..(1 << k) {
        let ones = x.count_ones() as i32;
        let prob = p.powi(ones) * (1.0 - p).powi(k as i32 - ones);
        let y = x != 0;
        *joint.entry(x).or_insert(0.0) += prob;
        *s1.entry(x & s1_mask).or_insert(0.0) += prob;
        *s2y.entry((x & !s1_mask, y)).or_insert(0.0) += prob;
    }
    // Y is a function of X, so H(X_{S1}, X_{S2}, Y) = H(X).
    Ok((entropy(&s1) + entropy(&s2y) - entropy(&joint)).max(0.0))
}

/// `1 / min{1, 1 − δ + R_f}`.
pub fn secrecy_factor(delta: f64, rf: f64) -> f64 {
    1.0 / (1.0 - delta + rf).min(1.0)
}

/// `1 / min{1, 2 − 2δ}`; infinite at `δ = 1`.
pub fn public_factor(delta: f64) -> f64 {
    let d = (2.0 - 2.0 * delta).min(1.0);
    if d <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    /// Maximising partition size `i`, for bounds with an inner maximum.
    pub argmax: Option<usize>,
    /// Set when every term of the maximum is zero (e.g. `N − K = 1`).
    pub degenerate: bool,
}

impl Bound {
    fn plain(value: f64) -> Self {
        Self {
            value,
            argmax: None,
            degenerate: false,
        }
    }

    /// Reported test count, `⌈value⌉`.
    pub fn tests(&self) -> u64 {
        if !self.value.is_finite() {
            return u64::MAX;
        }
        (self.value - CEIL_SLACK).ceil().max(0.0) as u64
    }

    pub fn is_unbounded(&self) -> bool {
        self.value.is_infinite()
    }
}

fn check(n: usize, k: usize, delta: f64, rf: f64, eps: f64) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= K <= N, got K = {k}, N = {n}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must be in [0, 1), got {delta}")));
    }
    if !(0.0..=1.0).contains(&rf) {
        return Err(Error::invalid(format!("Rf must be in [0, 1], got {rf}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be >= 0, got {eps}")));
    }
    Ok(())
}

/// `max_{i=1..K} (K/i) log2 C(N−K, i)` and its maximiser.
pub fn sufficiency_term(n: usize, k: usize) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 1);
    for i in 1..=k {
        let v = k as f64 / i as f64 * log2_binomial((n - k) as u64, i as u64);
        if v > best.0 {
            best = (v, i);
        }
    }
    (best.0.max(0.0), best.1)
}

fn max_term(n: usize, k: usize, scale: f64) -> Bound {
    let (v, i) = sufficiency_term(n, k);
    Bound {
        value: scale * v,
        argmax: Some(i),
        degenerate: v <= 0.0,
    }
}

/// Tests sufficient for reliable, weakly secure adaptive testing with
/// private feedback at rate `rf`.
pub fn sufficient_sagt(n: usize, k: usize, delta: f64, rf: f64, eps: f64) -> Result<Bound> {
    check(n, k, delta, rf, eps)?;
    Ok(max_term(n, k, (1.0 + eps) * secrecy_factor(delta, rf)))
}

/// Closed-form relaxation `(1+ε)/min{1,1−δ+R_f} · K log2((N−K)e)`.
pub fn corollary_bound(n: usize, k: usize, delta: f64, rf: f64, eps: f64) -> Result<Bound> {
    check(n, k, delta, rf, eps)?;
    let inner = k as f64 * ((n - k) as f64 * std::f64::consts::E).log2();
    Ok(Bound::plain((1.0 + eps) * secrecy_factor(delta, rf) * inner))
}

/// Tests necessary under any scheme: `log2 C(N, K) / min{1, 1 − δ + R_f}`.
pub fn converse_sagt(n: usize, k: usize, delta: f64, rf: f64) -> Result<Bound> {
    check(n, k, delta, rf, 0.0)?;
    Ok(Bound::plain(
        secrecy_factor(delta, rf) * log2_binomial(n as u64, k as u64),
    ))
}

/// Secure non-adaptive bounds `(upper, lower)`.
pub fn sngt_bounds(n: usize, k: usize, delta: f64, eps: f64) -> Result<(Bound, Bound)> {
    check(n, k, delta, 0.0, eps)?;
    let factor = 1.0 / (1.0 - delta);
    let upper = max_term(n, k, (1.0 + eps) * factor);
    let lower = Bound::plain(factor * log2_binomial(n as u64, k as u64));
    Ok((upper, lower))
}

/// Plain non-adaptive bounds `(upper, lower)` with the single-test mutual
/// information evaluated at Bernoulli(ln 2 / K).
pub fn ngt_bounds(n: usize, k: usize, eps: f64) -> Result<(Bound, Bound)> {
    check(n, k, 0.0, 0.0, eps)?;
    let p = std::f64::consts::LN_2 / k as f64;
    let mut upper = (f64::NEG_INFINITY, 1);
    let mut lower = (f64::NEG_INFINITY, 1);
    for i in 1..=k {
        let mi = mi_boolean(k, i, p)?;
        let u = log2_binomial((n - k) as u64, i as u64) / mi;
        let l = log2_binomial((n - k + i) as u64, i as u64) / mi;
        if u > upper.0 {
            upper = (u, i);
        }
        if l > lower.0 {
            lower = (l, i);
        }
    }
    let mk = |(v, i): (f64, usize), scale: f64| Bound {
        value: scale * v.max(0.0),
        argmax: Some(i),
        degenerate: v <= 0.0,
    };
    Ok((mk(upper, 1.0 + eps), mk(lower, 1.0)))
}

/// Every bound for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub rf: f64,
    pub eps: f64,
    pub sufficient_sagt: Bound,
    pub corollary: Bound,
    pub converse_sagt: Bound,
    pub sufficient_sngt: Bound,
    pub converse_sngt: Bound,
    pub sufficient_ngt: Bound,
    pub converse_ngt: Bound,
    pub public: Bound,
}

pub const BOUND_CSV_HEADER: &str = "N,K,delta,Rf,eps,t_sufficient_sagt,t_corollary,t_converse_sagt,\
t_sufficient_sngt,t_converse_sngt,t_sufficient_ngt,t_converse_ngt,t_public,i_star,i_star_value,\
rate_log2_binom_over_t";

impl BoundReport {
    pub fn evaluate(n: usize, k: usize, delta: f64, rf: f64, eps: f64) -> Result<Self> {
        let sufficient_sagt = sufficient_sagt(n, k, delta, rf, eps)?;
        let (sufficient_sngt, converse_sngt) = sngt_bounds(n, k, delta, eps)?;
        let (sufficient_ngt, converse_ngt) = ngt_bounds(n, k, eps)?;
        let base = max_term(n, k, 1.0 + eps);
        Ok(Self {
            n,
            k,
            delta,
            rf,
            eps,
            sufficient_sagt,
            corollary: corollary_bound(n, k, delta, rf, eps)?,
            converse_sagt: converse_sagt(n, k, delta, rf)?,
            sufficient_sngt,
            converse_sngt,
            sufficient_ngt,
            converse_ngt,
            public: Bound {
                value: public_factor(delta) * base.value,
                ..base
            },
        })
    }

    /// One CSV row matching [`BOUND_CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let t = |b: &Bound| {
            if b.is_unbounded() {
                "inf".to_string()
            } else {
                b.tests().to_string()
            }
        };
        let (i_star_value, _) = sufficiency_term(self.n, self.k);
        let rate = log2_binomial(self.n as u64, self.k as u64) / self.sufficient_sagt.tests().max(1) as f64;
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
            self.n,
            self.k,
            self.delta,
            self.rf,
            self.eps,
            t(&self.sufficient_sagt),
            t(&self.corollary),
            t(&self.converse_sagt),
            t(&self.sufficient_sngt),
            t(&self.converse_sngt),
            t(&self.sufficient_ngt),
            t(&self.converse_ngt),
            t(&self.public),
            self.sufficient_sagt.argmax.unwrap_or(1),
            i_star_value,
            rate,
        );
        s
    }
}
