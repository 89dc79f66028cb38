//! Eavesdropper leakage `I(W; Z)` of a realized codebook.
//!
//! The exact route enumerates the outcome distribution of every defective
//! set and pushes it through the erasure channel one test at a time. A
//! second enumeration in [`exact_leakage_oracle`] walks the eavesdropper
//! alphabet in the outer loop instead; the two must agree.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::codebook::{Codebook, CodebookParams};
use crate::error::{Error, Result};
use crate::mds::{key_from_value, key_value, mds_generator, KeyLayout, MdsGenerator};
use crate::protocol::{random_defectives, transmit, RoundSeeds};
use crate::rng::{derive_seed, Domain};
use crate::bounds::log2_binomial;
use crate::subset::{binomial_u64, Combinations, DefectiveIndex};

/// Default cap on `C(N,K)·M^K·F^K·3^T`.
pub const DEFAULT_LEAKAGE_BUDGET: f64 = 1e8;
pub const MIN_MC_TRIALS: u64 = 1000;
/// Trials sharing one codebook in the fresh-codebook Monte Carlo mode.
pub const DEFAULT_MC_BLOCK: u64 = 500;

const RANKS_PER_TASK: u64 = 8;

pub const LEAKAGE_CSV_HEADER: &str = "N,K,T,M,F,delta,Rf,method,mi_bits,mi_per_test";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    pub params: CodebookParams,
    pub m: usize,
    pub f: usize,
    pub method: Method,
    pub mi_bits: f64,
    pub mi_per_test: f64,
    /// Enumeration size for the exact method, trials for Monte Carlo.
    pub samples: u64,
    pub std_error: Option<f64>,
    /// Miller–Madow estimate of the plug-in bias (Monte Carlo only).
    pub bias_estimate: Option<f64>,
    pub note: Option<String>,
}

impl LeakageReport {
    pub fn csv_row(&self) -> String {
        let p = &self.params;
        format!(
            "{},{},{},{},{},{},{},{},{:.12},{:.12}",
            p.n,
            p.k,
            p.t,
            self.m,
            self.f,
            p.delta,
            p.rf,
            self.method.as_str(),
            self.mi_bits,
            self.mi_per_test
        )
    }
}

fn entropy(dist: &[f64]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

fn enumeration_size(cb: &Codebook) -> Result<f64> {
    let w = binomial_u64(cb.n() as u64, cb.k() as u64)? as f64;
    let mf = (cb.m() * cb.f()) as f64;
    Ok(w * mf.powi(cb.k() as i32) * 3f64.powi(cb.t() as i32))
}

fn check_exact(cb: &Codebook, budget: f64) -> Result<f64> {
    let delta = cb.params().delta;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must be in [0, 1], got {delta}")));
    }
    let size = enumeration_size(cb)?;
    if size > budget || cb.t() > 32 {
        return Err(Error::BudgetExceeded {
            what: "leakage enumeration C(N,K)*M^K*F^K*3^T (use the Monte Carlo estimator)",
            needed: size,
            cap: budget,
        });
    }
    Ok(size)
}

/// Key indices the defective items can take, with their probabilities.
enum KeyModel {
    /// Any `K` keys are jointly uniform: every `F^K` tuple equally likely.
    Uniform,
    /// Per source-key value, the key index of every item.
    Expanded(Vec<Vec<usize>>),
}

fn key_model(cb: &Codebook, g: &MdsGenerator) -> Result<KeyModel> {
    if g.k() != cb.k() || g.n() != cb.n() {
        return Err(Error::ParameterMismatch(format!(
            "generator is ({}, {}), codebook needs ({}, {})",
            g.k(),
            g.n(),
            cb.k(),
            cb.n()
        )));
    }
    let bits = cb.key_bits() as usize;
    let layout = KeyLayout::new(g, bits)?;
    if layout.is_exact() {
        return Ok(KeyModel::Uniform);
    }
    let k = cb.k();
    let total = 1u64 << (k * bits);
    let mut table = Vec::with_capacity(total as usize);
    for v in 0..total {
        let source: Vec<_> = (0..k)
            .map(|i| key_from_value((v >> (i * bits)) & ((1 << bits) - 1), bits))
            .collect();
        let keys = layout.expand(&source)?;
        table.push(keys.iter().map(|key| key_value(key) as usize).collect());
    }
    Ok(KeyModel::Expanded(table))
}

/// Outcome distribution of one defective set, indexed by the packed outcome.
fn outcome_distribution(cb: &Codebook, items: &[usize], keys: &KeyModel) -> Vec<f64> {
    let (k, m, f, t) = (items.len(), cb.m(), cb.f(), cb.t());
    let mut dist = vec![0.0; 1 << t];
    let mut add_tuple = |fs: &[usize], weight: f64| {
        let mut subs = vec![0usize; k];
        let w = weight / (m as f64).powi(k as i32);
        loop {
            let mut y = 0u64;
            for (i, &j) in items.iter().enumerate() {
                y |= cb.row_unchecked(j, subs[i], fs[i])[0];
            }
            dist[y as usize] += w;
            let mut pos = 0;
            while pos < k {
                subs[pos] += 1;
                if subs[pos] < m {
                    break;
                }
                subs[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    };
    match keys {
        KeyModel::Uniform => {
            let weight = 1.0 / (f as f64).powi(k as i32);
            let mut fs = vec![0usize; k];
            loop {
                add_tuple(&fs, weight);
                let mut pos = 0;
                while pos < k {
                    fs[pos] += 1;
                    if fs[pos] < f {
                        break;
                    }
                    fs[pos] = 0;
                    pos += 1;
                }
                if pos == k {
                    break;
                }
            }
        }
        KeyModel::Expanded(table) => {
            let weight = 1.0 / table.len() as f64;
            for row in table {
                let fs: Vec<usize> = items.iter().map(|&j| row[j]).collect();
                add_tuple(&fs, weight);
            }
        }
    }
    dist
}

/// Push a distribution over `{0,1}^T` through the erasure channel, one
/// coordinate at a time, into a distribution over `{0,1,e}^T`.
fn erase(ydist: &[f64], t: usize, delta: f64) -> Vec<f64> {
    let mut cur = ydist.to_vec();
    let mut pow3 = 1usize;
    for s in 0..t {
        let rest_len = 1usize << (t - s - 1);
        let mut next = vec![0.0; pow3 * 3 * rest_len];
        for b in 0..(rest_len << 1) {
            let (bit, rest) = (b & 1, b >> 1);
            let base = pow3 * 3 * rest;
            for a in 0..pow3 {
                let v = cur[a + pow3 * b];
                if v == 0.0 {
                    continue;
                }
                next[base + pow3 * bit + a] += delta * v;
                next[base + pow3 * 2 + a] += (1.0 - delta) * v;
            }
        }
        cur = next;
        pow3 *= 3;
    }
    cur
}

fn finish(cb: &Codebook, mi: f64, samples: u64, method: Method) -> Result<LeakageReport> {
    let cap = log2_binomial(cb.n() as u64, cb.k() as u64).min(cb.t() as f64);
    if !(mi > -1e-9 && mi <= cap + 1e-9) {
        return Err(Error::Invariant(format!("leakage {mi} outside [0, {cap}]")));
    }
    let mi = mi.max(0.0);
    Ok(LeakageReport {
        params: *cb.params(),
        m: cb.m(),
        f: cb.f(),
        method,
        mi_bits: mi,
        mi_per_test: mi / cb.t() as f64,
        samples,
        std_error: None,
        bias_estimate: None,
        note: Some("conditioned on the realized codebook".into()),
    })
}

/// `I(W; Z)` for the given codebook with `W` uniform, by exact enumeration.
pub fn exact_leakage(cb: &Codebook, g: &MdsGenerator) -> Result<LeakageReport> {
    exact_leakage_with_budget(cb, g, DEFAULT_LEAKAGE_BUDGET)
}

pub fn exact_leakage_with_budget(cb: &Codebook, g: &MdsGenerator, budget: f64) -> Result<LeakageReport> {
    let size = check_exact(cb, budget)?;
    let keys = key_model(cb, g)?;
    let (n, k, t) = (cb.n(), cb.k(), cb.t());
    let delta = cb.params().delta;
    let total = binomial_u64(n as u64, k as u64)?;
    let zlen = 3usize.pow(t as u32);

    let tasks: Vec<u64> = (0..total).step_by(RANKS_PER_TASK as usize).collect();
    let partials: Vec<Result<(Vec<f64>, f64)>> = tasks
        .par_iter()
        .map(|&start| {
            let mut pz = vec![0.0; zlen];
            let mut h = 0.0;
            for rank in start..(start + RANKS_PER_TASK).min(total) {
                let w = DefectiveIndex::from_rank(rank, n, k)?;
                let zdist = erase(&outcome_distribution(cb, w.items(), &keys), t, delta);
                h += entropy(&zdist);
                for (acc, p) in pz.iter_mut().zip(&zdist) {
                    *acc += p;
                }
            }
            Ok((pz, h))
        })
        .collect();

    let mut pz = vec![0.0; zlen];
    let mut h_cond = 0.0;
    for part in partials {
        let (p, h) = part?;
        for (acc, v) in pz.iter_mut().zip(&p) {
            *acc += v;
        }
        h_cond += h;
    }
    let scale = 1.0 / total as f64;
    pz.iter_mut().for_each(|p| *p *= scale);
    let mi = entropy(&pz) - h_cond * scale;
    finish(cb, mi, size as u64, Method::Exact)
}

/// Independent enumeration: eavesdropper symbols in the outer loop, the
/// per-set likelihood summed term by term, and `I` in divergence form.
/// Keys on the defective set are taken as uniform.
pub fn exact_leakage_oracle(cb: &Codebook) -> Result<f64> {
    check_exact(cb, 1e7)?;
    let (n, k, m, f, t) = (cb.n(), cb.k(), cb.m(), cb.f(), cb.t());
    let delta = cb.params().delta;

    // Every (sub-bin, key) assignment of a set yields one outcome vector.
    let sets: Vec<Vec<usize>> = Combinations::new(n, k).collect();
    let per_item = m * f;
    let assignments = per_item.pow(k as u32);
    let outcomes: Vec<Vec<Vec<bool>>> = sets
        .iter()
        .map(|items| {
            (0..assignments)
                .map(|a| {
                    let mut y = vec![false; t];
                    let mut rest = a;
                    for &j in items {
                        let choice = rest % per_item;
                        rest /= per_item;
                        let row = cb.row_bits(j, choice / f, choice % f).expect("in range").to_bools();
                        for (o, b) in y.iter_mut().zip(row) {
                            *o |= b;
                        }
                    }
                    y
                })
                .collect()
        })
        .collect();

    let zlen = 3u64.pow(t as u32);
    let mut total = 0.0;
    for zi in 0..zlen {
        let digits: Vec<u64> = (0..t).map(|s| (zi / 3u64.pow(s as u32)) % 3).collect();
        let lik: Vec<f64> = outcomes
            .iter()
            .map(|ys| {
                ys.iter()
                    .map(|y| {
                        digits
                            .iter()
                            .zip(y)
                            .map(|(&d, &b)| match d {
                                2 => 1.0 - delta,
                                d if (d == 1) == b => delta,
                                _ => 0.0,
                            })
                            .product::<f64>()
                    })
                    .sum::<f64>()
                    / assignments as f64
            })
            .collect();
        let pz = lik.iter().sum::<f64>() / sets.len() as f64;
        for &l in &lik {
            if l > 0.0 {
                total += l / sets.len() as f64 * (l / pz).log2();
            }
        }
    }
    Ok(total)
}

/// Where the Monte Carlo estimator draws its codebooks from.
#[derive(Debug, Clone, Copy)]
pub enum McCodebook<'a> {
    /// A fresh codebook for every block of this many trials.
    Fresh { block: u64 },
    /// One given codebook for all trials.
    Fixed(&'a Codebook),
}

/// Plug-in estimate of `I(W; Z)` from simulated rounds.
pub fn monte_carlo_leakage(params: &CodebookParams, trials: u64) -> Result<LeakageReport> {
    monte_carlo_leakage_with(params, trials, McCodebook::Fresh { block: DEFAULT_MC_BLOCK })
}

pub fn monte_carlo_leakage_with(params: &CodebookParams, trials: u64, source: McCodebook<'_>) -> Result<LeakageReport> {
    params.validate()?;
    if trials < MIN_MC_TRIALS {
        return Err(Error::invalid(format!("need at least {MIN_MC_TRIALS} trials, got {trials}")));
    }
    let g = mds_generator(params.k, params.n)?;
    let block = match source {
        McCodebook::Fresh { block } => block.max(1),
        McCodebook::Fixed(cb) => {
            if cb.params() != params {
                return Err(Error::ParameterMismatch("codebook was generated for other parameters".into()));
            }
            DEFAULT_MC_BLOCK
        }
    };
    let blocks: Vec<u64> = (0..trials.div_ceil(block)).collect();
    let histograms: Vec<Result<HashMap<(u64, u64), u64>>> = blocks
        .par_iter()
        .map(|&b| {
            let fresh;
            let cb = match source {
                McCodebook::Fixed(cb) => cb,
                McCodebook::Fresh { .. } => {
                    let p = CodebookParams {
                        seed: derive_seed(params.seed, Domain::Audit, b),
                        ..*params
                    };
                    fresh = Codebook::generate(&p)?;
                    &fresh
                }
            };
            let mut counts = HashMap::new();
            for i in b * block..((b + 1) * block).min(trials) {
                let w = random_defectives(params.n, params.k, params.seed, i)?;
                let seeds = RoundSeeds::derive(derive_seed(params.seed, Domain::Trial, i), 0);
                let tr = transmit(cb, &g, &w, &seeds, None)?;
                *counts.entry((w.rank(), tr.z.index())).or_insert(0) += 1;
            }
            Ok(counts)
        })
        .collect();

    let mut joint: HashMap<(u64, u64), u64> = HashMap::new();
    for h in histograms {
        for (key, c) in h? {
            *joint.entry(key).or_insert(0) += c;
        }
    }
    let mut cw: HashMap<u64, u64> = HashMap::new();
    let mut cz: HashMap<u64, u64> = HashMap::new();
    for (&(w, z), &c) in &joint {
        *cw.entry(w).or_insert(0) += c;
        *cz.entry(z).or_insert(0) += c;
    }
    let n = trials as f64;
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut cells: Vec<_> = joint.iter().collect();
    cells.sort();
    for (&(w, z), &c) in cells {
        let l = ((c as f64 * n) / (cw[&w] as f64 * cz[&z] as f64)).log2();
        let p = c as f64 / n;
        mean += p * l;
        second += p * l * l;
    }
    let se = ((second - mean * mean).max(0.0) / n).sqrt();
    let bias = (joint.len() as f64 - cw.len() as f64 - cz.len() as f64 + 1.0) / (2.0 * n * std::f64::consts::LN_2);

    let shape = params.shape();
    Ok(LeakageReport {
        params: *params,
        m: shape.m as usize,
        f: shape.f as usize,
        method: Method::MonteCarlo,
        mi_bits: mean,
        mi_per_test: mean / params.t as f64,
        samples: trials,
        std_error: Some(se),
        bias_estimate: Some(bias.max(0.0)),
        note: Some(match source {
            McCodebook::Fixed(_) => "plug-in estimate, fixed codebook; biased upward at small sample sizes".into(),
            McCodebook::Fresh { block } => {
                format!("plug-in estimate, fresh codebook every {block} trials; biased upward at small sample sizes")
            }
        }),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageComparison {
    pub keyed: LeakageReport,
    /// Same codebook cut down to one sub-bin and one key per item.
    pub unprotected: LeakageReport,
}

/// Exact leakage of the scheme against its first codeword per item.
pub fn compare_leakage(cb: &Codebook, g: &MdsGenerator) -> Result<LeakageComparison> {
    let keyed = exact_leakage(cb, g)?;
    let plain = cb.restrict(1, 1)?;
    let unprotected = exact_leakage(&plain, g)?;
    if keyed.mi_bits > unprotected.mi_bits + 1e-9 {
        return Err(Error::Invariant(format!(
            "keyed leakage {} exceeds unprotected {}",
            keyed.mi_bits, unprotected.mi_bits
        )));
    }
    Ok(LeakageComparison { keyed, unprotected })
}

pub fn leakage_comparison(params: &CodebookParams) -> Result<LeakageComparison> {
    let cb = Codebook::generate(params)?;
    let g = mds_generator(params.k, params.n)?;
    compare_leakage(&cb, &g)
}
