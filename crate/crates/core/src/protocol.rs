//! Round orchestration between the lab, the mixer and the eavesdropper.
//!
//! The lab streams uniform random bits to the mixer over the private link.
//! Both sides split the first `K·S_K` bits into `K` source keys and expand
//! them to `N` keys with the MDS generator; item `j` uses key `j` to pick a
//! codeword inside the sub-bin chosen by the mixer's private randomness.

use rand::Rng;

use crate::bits::BitRow;
use crate::bounds::sngt_bounds;
use crate::channel::{eavesdrop, pool, EveView, PoolOutcomes};
use crate::codebook::{derive_mf, floor_exponent, Codebook, CodebookParams, DEFAULT_BUDGET_BITS, DEFAULT_EPS_SEC};
use crate::decoder::{decode, DecodeResult, DEFAULT_DECODE_BUDGET};
use crate::error::{Error, Result};
use crate::mds::{key_value, mds_generator, KeyChunk, KeyLayout, MdsGenerator};
use crate::rng::{derive_seed, stream, Domain};
use crate::subset::DefectiveIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundSeeds {
    pub feedback: u64,
    pub mixer: u64,
    pub eavesdropper: u64,
}

impl RoundSeeds {
    pub fn derive(master: u64, round: u64) -> Self {
        Self {
            feedback: derive_seed(master, Domain::Feedback, round),
            mixer: derive_seed(master, Domain::Mixer, round),
            eavesdropper: derive_seed(master, Domain::Eavesdropper, round),
        }
    }
}

/// Uniform bits the lab sends over the private link.
pub fn lab_feedback_bits(seed: u64, count: usize) -> Vec<bool> {
    let mut rng = stream(seed, Domain::Feedback, &[]);
    (0..count).map(|_| rng.gen::<bool>()).collect()
}

/// The mixer's private sub-bin choice for every item.
pub fn mixer_sub_bins(seed: u64, n: usize, m: usize) -> Vec<usize> {
    let mut rng = stream(seed, Domain::Mixer, &[]);
    (0..n).map(|_| rng.gen_range(0..m)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub feedback_bits: Vec<bool>,
    pub source_keys: Vec<KeyChunk>,
    pub expanded_keys: Vec<KeyChunk>,
    pub f_indices: Vec<usize>,
    /// Whether any `K` expanded keys are exactly uniform.
    pub exact: bool,
}

impl KeyMaterial {
    /// Split the first `K·key_bits` feedback bits into source keys, expand
    /// them and read off the key index of every item.
    pub fn derive(feedback_bits: &[bool], key_bits: usize, g: &MdsGenerator) -> Result<Self> {
        let k = g.k();
        if feedback_bits.len() < k * key_bits {
            return Err(Error::LengthMismatch {
                expected: k * key_bits,
                got: feedback_bits.len(),
            });
        }
        if key_bits > 63 {
            return Err(Error::invalid("keys longer than 63 bits are not supported"));
        }
        let source_keys: Vec<KeyChunk> = feedback_bits[..k * key_bits]
            .chunks(key_bits.max(1))
            .take(k)
            .map(<[bool]>::to_vec)
            .chain(std::iter::repeat(Vec::new()))
            .take(k)
            .collect();
        let layout = KeyLayout::new(g, key_bits)?;
        let expanded_keys = layout.expand(&source_keys)?;
        let f = 1u64 << key_bits;
        let f_indices = expanded_keys
            .iter()
            .map(|key| (key_value(key) % f) as usize)
            .collect();
        Ok(Self {
            feedback_bits: feedback_bits.to_vec(),
            source_keys,
            expanded_keys,
            f_indices,
            exact: layout.is_exact(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTranscript {
    pub round: u64,
    pub params: CodebookParams,
    pub codebook_seed: u64,
    pub m: usize,
    pub f: usize,
    pub key_bits: u32,
    pub keys: KeyMaterial,
    /// Key indices the mixer derived on its side.
    pub mixer_f_indices: Vec<usize>,
    pub sub_bins: Vec<usize>,
    pub truth: DefectiveIndex,
    pub y: PoolOutcomes,
    pub z: EveView,
    /// Feedback-dependent tests and the column chosen there (column variant).
    pub substitutions: Option<Vec<bool>>,
    pub decoded: Option<std::result::Result<DecodeResult, Error>>,
}

impl RoundTranscript {
    pub fn decoded_ok(&self) -> bool {
        matches!(&self.decoded, Some(Ok(r)) if r.is_correct(&self.truth))
    }

    /// `round,w,decoded,ok,T,M,F,S_K`
    pub fn log_line(&self) -> String {
        let decoded = match &self.decoded {
            Some(Ok(r)) => match &r.w_hat {
                Some(w) => w.rank().to_string(),
                None => r.status.as_str().to_string(),
            },
            Some(Err(_)) => "error".to_string(),
            None => "-".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.round,
            self.truth.rank(),
            decoded,
            self.decoded_ok() as u8,
            self.params.t,
            self.m,
            self.f,
            self.key_bits
        )
    }

    /// Full record for offline auditing, one `key=value` per line.
    pub fn dump(&self) -> String {
        let bits = |b: &[bool]| b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        out.push_str(&format!("round={}\n", self.round));
        out.push_str(&format!(
            "params=N:{} K:{} T:{} delta:{} Rf:{} eps_sec:{}\n",
            self.params.n, self.params.k, self.params.t, self.params.delta, self.params.rf, self.params.eps_sec
        ));
        out.push_str(&format!("codebook_seed={}\n", self.codebook_seed));
        out.push_str(&format!("M={} F={} S_K={}\n", self.m, self.f, self.key_bits));
        out.push_str(&format!("feedback={}\n", bits(&self.keys.feedback_bits)));
        out.push_str(&format!("f_indices={}\n", list(&self.keys.f_indices)));
        out.push_str(&format!("sub_bins={}\n", list(&self.sub_bins)));
        out.push_str(&format!("w={} items={}\n", self.truth.rank(), list(self.truth.items())));
        out.push_str(&format!("y={}\nz={}\n", self.y.y, self.z));
        if let Some(s) = &self.substitutions {
            out.push_str(&format!("substitutions={}\n", bits(s)));
        }
        out
    }
}

fn check_round_inputs(params: &CodebookParams, cb: &Codebook, g: &MdsGenerator, w: &DefectiveIndex) -> Result<()> {
    params.validate()?;
    if cb.params() != params {
        return Err(Error::ParameterMismatch("codebook was generated for other parameters".into()));
    }
    if g.k() != params.k || g.n() != params.n {
        return Err(Error::ParameterMismatch(format!(
            "generator is ({}, {}), parameters need ({}, {})",
            g.k(),
            g.n(),
            params.k,
            params.n
        )));
    }
    if w.items().len() != params.k || w.items().iter().any(|&j| j >= params.n) {
        return Err(Error::ParameterMismatch("defective set does not match (N, K)".into()));
    }
    Ok(())
}

/// Everything up to and including the eavesdropper; no decoding.
pub(crate) fn transmit(
    cb: &Codebook,
    g: &MdsGenerator,
    w: &DefectiveIndex,
    seeds: &RoundSeeds,
    feedback: Option<Vec<bool>>,
) -> Result<RoundTranscript> {
    let params = *cb.params();
    let shape = derive_mf(&params);
    let key_bits = cb.key_bits() as usize;
    let feedback_bits =
        feedback.unwrap_or_else(|| lab_feedback_bits(seeds.feedback, shape.feedback_bits as usize));

    let lab = KeyMaterial::derive(&feedback_bits, key_bits, g)?;
    let mixer = KeyMaterial::derive(&feedback_bits, key_bits, g)?;

    let sub_bins = mixer_sub_bins(seeds.mixer, cb.n(), cb.m());
    let rows: Vec<BitRow> = w
        .items()
        .iter()
        .map(|&j| cb.row_bits(j, sub_bins[j], mixer.f_indices[j]))
        .collect::<Result<_>>()?;
    let y = pool(&rows)?;
    let z = eavesdrop(&y, params.delta, seeds.eavesdropper)?;
    Ok(RoundTranscript {
        round: 0,
        params,
        codebook_seed: params.seed,
        m: cb.m(),
        f: cb.f(),
        key_bits: cb.key_bits(),
        keys: lab,
        mixer_f_indices: mixer.f_indices,
        sub_bins,
        truth: w.clone(),
        y,
        z,
        substitutions: None,
        decoded: None,
    })
}

/// One batch round of `T` tests with keys from fresh feedback bits.
pub fn run_round(
    params: &CodebookParams,
    cb: &Codebook,
    g: &MdsGenerator,
    w: &DefectiveIndex,
    seeds: &RoundSeeds,
    decode_budget: u64,
) -> Result<RoundTranscript> {
    check_round_inputs(params, cb, g, w)?;
    let mut tr = transmit(cb, g, w, seeds, None)?;
    tr.decoded = Some(decode(cb, &tr.keys.f_indices, &tr.y, decode_budget));
    Ok(tr)
}

/// Same as [`run_round`] but with the feedback bits supplied by the caller
/// (as in a session, where they were streamed during the previous round).
pub fn run_round_with_feedback(
    params: &CodebookParams,
    cb: &Codebook,
    g: &MdsGenerator,
    w: &DefectiveIndex,
    seeds: &RoundSeeds,
    feedback: Vec<bool>,
    decode_budget: u64,
) -> Result<RoundTranscript> {
    check_round_inputs(params, cb, g, w)?;
    let mut tr = transmit(cb, g, w, seeds, Some(feedback))?;
    tr.decoded = Some(decode(cb, &tr.keys.f_indices, &tr.y, decode_budget));
    Ok(tr)
}

/// Settings shared by every round of a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionParams {
    pub n: usize,
    pub k: usize,
    /// Tests per round once feedback keys are available.
    pub t: usize,
    pub delta: f64,
    pub rf: f64,
    /// Reliability slack ε of the test-count bounds.
    pub eps: f64,
    pub eps_sec: f64,
    pub seed: u64,
    pub decode_budget: u64,
    pub codebook_budget: u64,
}

impl SessionParams {
    pub fn new(n: usize, k: usize, t: usize, delta: f64, rf: f64, eps: f64) -> Self {
        Self {
            n,
            k,
            t,
            delta,
            rf,
            eps,
            eps_sec: DEFAULT_EPS_SEC,
            seed: 0,
            decode_budget: DEFAULT_DECODE_BUDGET,
            codebook_budget: DEFAULT_BUDGET_BITS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn codebook_params(&self) -> CodebookParams {
        CodebookParams {
            n: self.n,
            k: self.k,
            t: self.t,
            delta: self.delta,
            rf: self.rf,
            eps_sec: self.eps_sec,
            seed: derive_seed(self.seed, Domain::Codebook, 1),
        }
    }

    /// Tests of the key-less first round: the secure non-adaptive sufficiency
    /// bound.
    pub fn first_round_tests(&self) -> Result<usize> {
        let (upper, _) = sngt_bounds(self.n, self.k, self.delta, self.eps)?;
        Ok(upper.tests().max(1) as usize)
    }

    /// Codebook parameters of the first round: `T_0` tests, no feedback, so
    /// `F_0 = 1` and `M_0 = 2^⌊T_0(δ − ε_sec)/K⌋`.
    pub fn first_round_params(&self) -> Result<CodebookParams> {
        Ok(CodebookParams {
            t: self.first_round_tests()?,
            rf: 0.0,
            seed: derive_seed(self.seed, Domain::Codebook, 0),
            ..self.codebook_params()
        })
    }
}

/// The opening round, run without any feedback key at the secure
/// non-adaptive test count.
pub fn run_first_round(sp: &SessionParams, w: &DefectiveIndex, seeds: &RoundSeeds) -> Result<RoundTranscript> {
    let params = sp.first_round_params()?;
    let cb = Codebook::generate_with_budget(&params, sp.codebook_budget)?;
    let g = mds_generator(sp.k, sp.n)?;
    run_round(&params, &cb, &g, w, seeds, sp.decode_budget)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub rounds: Vec<RoundTranscript>,
    /// Per round: feedback bits the round needed but the previous round did
    /// not stream (filled with zeros).
    pub feedback_shortfall: Vec<usize>,
}

impl SessionReport {
    pub fn total_tests(&self) -> usize {
        self.rounds.iter().map(|r| r.params.t).sum()
    }

    pub fn amortized_tests(&self) -> f64 {
        self.total_tests() as f64 / self.rounds.len() as f64
    }

    pub fn successes(&self) -> usize {
        self.rounds.iter().filter(|r| r.decoded_ok()).count()
    }

    pub fn log(&self) -> String {
        let mut s = String::from("round,w,decoded,ok,T,M,F,S_K\n");
        for r in &self.rounds {
            s.push_str(&r.log_line());
            s.push('\n');
        }
        s
    }
}

/// `rounds` consecutive rounds. Round 1 is the key-less first round; the
/// feedback bits of round `r ≥ 2` are the bits the lab streamed at rate
/// `R_f` while round `r − 1` was running.
pub fn run_session(sp: &SessionParams, rounds: usize, w_sequence: &[DefectiveIndex]) -> Result<SessionReport> {
    if rounds == 0 {
        return Err(Error::invalid("a session needs at least one round"));
    }
    if w_sequence.len() < rounds {
        return Err(Error::LengthMismatch {
            expected: rounds,
            got: w_sequence.len(),
        });
    }
    let params = sp.codebook_params();
    params.validate()?;
    let g = mds_generator(sp.k, sp.n)?;
    let needed = derive_mf(&params).feedback_bits as usize;

    let first_seeds = RoundSeeds::derive(sp.seed, 0);
    let mut first = run_first_round(sp, &w_sequence[0], &first_seeds)?;
    first.round = 1;
    let mut out = vec![first];
    let mut shortfall = vec![0];

    let cb = if rounds > 1 {
        Some(Codebook::generate_with_budget(&params, sp.codebook_budget)?)
    } else {
        None
    };
    for r in 1..rounds {
        let prev = &out[r - 1];
        let prev_seeds = RoundSeeds::derive(sp.seed, (r - 1) as u64);
        let streamed = floor_exponent(prev.params.t as f64 * sp.rf) as usize;
        let mut bits = lab_feedback_bits(prev_seeds.feedback, streamed);
        bits.truncate(needed);
        let missing = needed.saturating_sub(bits.len());
        bits.resize(needed, false);
        let seeds = RoundSeeds::derive(sp.seed, r as u64);
        let cb = cb.as_ref().expect("generated when rounds > 1");
        let mut tr = run_round_with_feedback(&params, cb, &g, &w_sequence[r], &seeds, bits, sp.decode_budget)?;
        tr.round = r as u64 + 1;
        out.push(tr);
        shortfall.push(missing);
    }
    Ok(SessionReport {
        rounds: out,
        feedback_shortfall: shortfall,
    })
}

/// Per-test adaptive variant: rows come from bins of `M` codewords (no key
/// layer) and every test owns a column bin of two columns: the original
/// one and a fresh Bernoulli(ln 2 / K) column. On the first `⌊T·R_f⌋` tests
/// a feedback bit picks the column: 0 keeps the original, 1 substitutes.
pub fn run_round_columns(
    params: &CodebookParams,
    w: &DefectiveIndex,
    seeds: &RoundSeeds,
    decode_budget: u64,
) -> Result<RoundTranscript> {
    let shape = derive_mf(params);
    let bits = lab_feedback_bits(seeds.feedback, shape.feedback_bits as usize);
    run_round_columns_with_feedback(params, w, seeds, bits, decode_budget)
}

pub fn run_round_columns_with_feedback(
    params: &CodebookParams,
    w: &DefectiveIndex,
    seeds: &RoundSeeds,
    feedback: Vec<bool>,
    decode_budget: u64,
) -> Result<RoundTranscript> {
    params.validate()?;
    if w.items().len() != params.k || w.items().iter().any(|&j| j >= params.n) {
        return Err(Error::ParameterMismatch("defective set does not match (N, K)".into()));
    }
    let shape = derive_mf(params);
    let scheduled = shape.feedback_bits as usize;
    if feedback.len() != scheduled {
        return Err(Error::LengthMismatch {
            expected: scheduled,
            got: feedback.len(),
        });
    }
    let base = Codebook::generate_shape(params, shape.m, 1, 0, DEFAULT_BUDGET_BITS)?;
    let alternatives = column_bins(params, scheduled);

    // Effective rows after the substitutions, for every item and sub-bin.
    let mut rows = Vec::with_capacity(params.n * base.m());
    for j in 0..params.n {
        for sub in 0..base.m() {
            let mut row = base.row_bits(j, sub, 0)?;
            for (t, &bit) in feedback.iter().enumerate() {
                if bit {
                    row.set(t, alternatives[t].get(j));
                }
            }
            rows.push(row);
        }
    }
    let mut eff_params = *params;
    eff_params.rf = 0.0;
    let effective = Codebook::from_rows(&eff_params, base.m(), 1, &rows)?;

    let sub_bins = mixer_sub_bins(seeds.mixer, params.n, base.m());
    let chosen: Vec<BitRow> = w
        .items()
        .iter()
        .map(|&j| effective.row_bits(j, sub_bins[j], 0))
        .collect::<Result<_>>()?;
    let y = pool(&chosen)?;
    let z = eavesdrop(&y, params.delta, seeds.eavesdropper)?;
    let f_indices = vec![0; params.n];
    let decoded = decode(&effective, &f_indices, &y, decode_budget);
    let mut substitutions = vec![false; params.t];
    substitutions[..scheduled].copy_from_slice(&feedback);
    Ok(RoundTranscript {
        round: 0,
        params: *params,
        codebook_seed: params.seed,
        m: base.m(),
        f: 1,
        key_bits: 0,
        keys: KeyMaterial {
            feedback_bits: feedback,
            source_keys: Vec::new(),
            expanded_keys: Vec::new(),
            f_indices: f_indices.clone(),
            exact: true,
        },
        mixer_f_indices: f_indices,
        sub_bins,
        truth: w.clone(),
        y,
        z,
        substitutions: Some(substitutions),
        decoded: Some(decoded),
    })
}

/// Second column of the bin of each feedback-dependent test.
fn column_bins(params: &CodebookParams, scheduled: usize) -> Vec<BitRow> {
    let p = params.p();
    (0..scheduled)
        .map(|t| {
            let mut rng = stream(params.seed, Domain::ColumnBin, &[t as u64]);
            let col: Vec<bool> = (0..params.n).map(|_| rng.gen_bool(p)).collect();
            BitRow::from_bools(&col)
        })
        .collect()
}

/// Uniformly random defective set for trial `counter`.
pub fn random_defectives(n: usize, k: usize, seed: u64, counter: u64) -> Result<DefectiveIndex> {
    let total = crate::subset::binomial_u64(n as u64, k as u64)?;
    let mut rng = stream(seed, Domain::Defective, &[counter]);
    DefectiveIndex::from_rank(rng.gen_range(0..total), n, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize, k: usize, t: usize, delta: f64, rf: f64) -> (CodebookParams, Codebook, MdsGenerator) {
        let p = CodebookParams::new(n, k, t, delta, rf).with_seed(21);
        let cb = Codebook::generate(&p).unwrap();
        let g = mds_generator(k, n).unwrap();
        (p, cb, g)
    }

    #[test]
    fn zero_rate_uses_first_key_everywhere() {
        let (p, cb, g) = setup(8, 2, 20, 0.5, 0.0);
        assert_eq!(cb.f(), 1);
        let w = DefectiveIndex::from_items(vec![1, 5], 8).unwrap();
        let tr = run_round(&p, &cb, &g, &w, &RoundSeeds::derive(3, 0), DEFAULT_DECODE_BUDGET).unwrap();
        assert!(tr.keys.f_indices.iter().all(|&f| f == 0));
        assert!(tr.keys.feedback_bits.is_empty());
    }

    #[test]
    fn no_choices_means_deterministic_outcome() {
        let p = CodebookParams::new(6, 2, 10, 0.05, 0.0).with_seed(2);
        let cb = Codebook::generate(&p).unwrap();
        assert_eq!((cb.m(), cb.f()), (1, 1));
        let g = mds_generator(2, 6).unwrap();
        let w = DefectiveIndex::from_items(vec![0, 3], 6).unwrap();
        let expected = pool(&[cb.row_bits(0, 0, 0).unwrap(), cb.row_bits(3, 0, 0).unwrap()]).unwrap();
        for s in 0..5 {
            let tr = run_round(&p, &cb, &g, &w, &RoundSeeds::derive(s, 0), DEFAULT_DECODE_BUDGET).unwrap();
            assert_eq!(tr.y, expected);
        }
    }

    #[test]
    fn rerun_gives_same_transcript() {
        let (p, cb, g) = setup(10, 2, 24, 0.5, 0.25);
        let w = DefectiveIndex::from_rank(7, 10, 2).unwrap();
        let seeds = RoundSeeds::derive(99, 4);
        let a = run_round(&p, &cb, &g, &w, &seeds, DEFAULT_DECODE_BUDGET).unwrap();
        let b = run_round(&p, &cb, &g, &w, &seeds, DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lab_and_mixer_agree_and_outcome_recomputes() {
        let (p, cb, g) = setup(12, 3, 40, 0.6, 0.3);
        for s in 0..20 {
            let w = random_defectives(12, 3, 5, s).unwrap();
            let tr = run_round(&p, &cb, &g, &w, &RoundSeeds::derive(s, 1), DEFAULT_DECODE_BUDGET).unwrap();
            assert_eq!(tr.keys.f_indices, tr.mixer_f_indices);
            let rows: Vec<BitRow> = w
                .items()
                .iter()
                .map(|&j| cb.row_bits(j, tr.sub_bins[j], tr.keys.f_indices[j]).unwrap())
                .collect();
            assert_eq!(pool(&rows).unwrap(), tr.y);
            assert!(tr.z.consistent_with(&tr.y));
            assert!(tr.sub_bins.iter().all(|&m| m < cb.m()));
            assert!(tr.keys.f_indices.iter().all(|&f| f < cb.f()));
        }
    }

    #[test]
    fn source_keys_are_leading_feedback_bits() {
        let g = mds_generator(2, 5).unwrap();
        let bits: Vec<bool> = [1, 0, 1, 1, 0, 0, 1, 1].iter().map(|&b| b == 1).collect();
        let km = KeyMaterial::derive(&bits, 3, &g).unwrap();
        assert_eq!(km.source_keys, vec![bits[0..3].to_vec(), bits[3..6].to_vec()]);
        assert_eq!(km.expanded_keys.len(), 5);
        assert!(km.exact);
        assert!(KeyMaterial::derive(&bits[..5], 3, &g).is_err());
    }

    #[test]
    fn parameter_mismatch_is_reported() {
        let (p, cb, g) = setup(8, 2, 20, 0.5, 0.25);
        let w = DefectiveIndex::from_items(vec![0, 1], 8).unwrap();
        let other = CodebookParams { t: 21, ..p };
        assert!(run_round(&other, &cb, &g, &w, &RoundSeeds::derive(0, 0), 1000).is_err());
        let g3 = mds_generator(3, 8).unwrap();
        assert!(run_round(&p, &cb, &g3, &w, &RoundSeeds::derive(0, 0), 1000).is_err());
        let w3 = DefectiveIndex::from_items(vec![0, 1, 2], 8).unwrap();
        assert!(run_round(&p, &cb, &g, &w3, &RoundSeeds::derive(0, 0), 1000).is_err());
    }

    #[test]
    fn first_round_without_eavesdropper_has_single_sub_bin() {
        let sp = SessionParams::new(20, 2, 12, 0.0, 0.0, 0.2).with_seed(1);
        let p = sp.first_round_params().unwrap();
        let shape = derive_mf(&p);
        assert_eq!((shape.m, shape.f), (1, 1));
    }

    #[test]
    fn first_round_doubles_tests_at_half_leakage() {
        let sp = SessionParams::new(100, 2, 18, 0.5, 0.25, 0.0);
        let base = sngt_bounds(100, 2, 0.0, 0.0).unwrap().0.value;
        let expect = (2.0 * base - 1e-9).ceil() as usize;
        assert_eq!(sp.first_round_tests().unwrap(), expect);
        let p = sp.first_round_params().unwrap();
        let shape = derive_mf(&p);
        assert_eq!(shape.f, 1);
        assert_eq!(shape.m_bits, floor_exponent(p.t as f64 * (0.5 - DEFAULT_EPS_SEC) / 2.0));
    }

    #[test]
    fn first_round_is_a_zero_rate_round() {
        let sp = SessionParams::new(12, 2, 14, 0.4, 0.25, 0.2).with_seed(8);
        let w = DefectiveIndex::from_items(vec![2, 9], 12).unwrap();
        let seeds = RoundSeeds::derive(4, 0);
        let a = run_first_round(&sp, &w, &seeds).unwrap();
        let p = sp.first_round_params().unwrap();
        let cb = Codebook::generate(&p).unwrap();
        let g = mds_generator(2, 12).unwrap();
        let b = run_round(&p, &cb, &g, &w, &seeds, DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_round_session_is_first_round() {
        let sp = SessionParams::new(12, 2, 14, 0.4, 0.25, 0.2).with_seed(8);
        let w = DefectiveIndex::from_items(vec![2, 9], 12).unwrap();
        let report = run_session(&sp, 1, std::slice::from_ref(&w)).unwrap();
        let mut first = run_first_round(&sp, &w, &RoundSeeds::derive(8, 0)).unwrap();
        first.round = 1;
        assert_eq!(report.rounds, vec![first]);
        assert!(run_session(&sp, 0, &[]).is_err());
    }

    #[test]
    fn amortized_tests_fall_towards_t() {
        let sp = SessionParams::new(16, 2, 14, 0.4, 0.25, 0.2).with_seed(3);
        let ws: Vec<_> = (0..10).map(|i| random_defectives(16, 2, 3, i).unwrap()).collect();
        let t0 = sp.first_round_tests().unwrap();
        let mut last = f64::INFINITY;
        for r in 1..=10 {
            let rep = run_session(&sp, r, &ws).unwrap();
            let a = rep.amortized_tests();
            assert!((a - (t0 + (r - 1) * 14) as f64 / r as f64).abs() < 1e-12);
            assert!(a <= last);
            last = a;
        }
        let rep = run_session(&sp, 10, &ws).unwrap();
        assert!(rep.rounds[1..].iter().all(|r| r.params.t == 14));
        assert!(rep.feedback_shortfall.iter().all(|&s| s == 0));
        assert_eq!(rep.log().lines().count(), 11);
    }

    #[test]
    fn column_variant_zero_rate_matches_plain_round() {
        let p = CodebookParams::new(10, 2, 16, 0.5, 0.0).with_seed(6);
        let w = DefectiveIndex::from_items(vec![3, 4], 10).unwrap();
        let seeds = RoundSeeds::derive(1, 2);
        let a = run_round_columns(&p, &w, &seeds, DEFAULT_DECODE_BUDGET).unwrap();
        let cb = Codebook::generate(&p).unwrap();
        let g = mds_generator(2, 10).unwrap();
        let b = run_round(&p, &cb, &g, &w, &seeds, DEFAULT_DECODE_BUDGET).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.sub_bins, b.sub_bins);
        assert!(a.substitutions.unwrap().iter().all(|&s| !s));
    }

    #[test]
    fn column_variant_zero_feedback_keeps_base_matrix() {
        let p = CodebookParams::new(10, 2, 16, 0.5, 0.25).with_seed(6);
        let shape = derive_mf(&p);
        let w = DefectiveIndex::from_items(vec![0, 7], 10).unwrap();
        let seeds = RoundSeeds::derive(1, 2);
        let zeros = vec![false; shape.feedback_bits as usize];
        let tr = run_round_columns_with_feedback(&p, &w, &seeds, zeros, DEFAULT_DECODE_BUDGET).unwrap();
        let base = Codebook::generate_shape(&p, shape.m, 1, 0, DEFAULT_BUDGET_BITS).unwrap();
        let rows: Vec<BitRow> = w.items().iter().map(|&j| base.row_bits(j, tr.sub_bins[j], 0).unwrap()).collect();
        assert_eq!(pool(&rows).unwrap(), tr.y);
    }

    #[test]
    fn column_variant_schedule() {
        let p = CodebookParams::new(6, 1, 8, 0.5, 0.5).with_seed(1);
        let w = DefectiveIndex::from_items(vec![2], 6).unwrap();
        let ones = vec![true; 4];
        let tr = run_round_columns_with_feedback(&p, &w, &RoundSeeds::derive(0, 0), ones, DEFAULT_DECODE_BUDGET)
            .unwrap();
        let subs = tr.substitutions.clone().unwrap();
        assert_eq!(subs, vec![true, true, true, true, false, false, false, false]);
        let alt = column_bins(&p, 4);
        for (t, col) in alt.iter().enumerate() {
            assert_eq!(tr.y.y.get(t), col.get(2));
        }
        assert!(run_round_columns_with_feedback(&p, &w, &RoundSeeds::derive(0, 0), vec![true; 3], 100).is_err());
    }

    #[test]
    fn column_variant_decodes_its_own_outcomes() {
        let p = CodebookParams::new(10, 2, 30, 0.3, 0.5).with_seed(11);
        let mut ok = 0;
        for i in 0..20 {
            let w = random_defectives(10, 2, 11, i).unwrap();
            let tr = run_round_columns(&p, &w, &RoundSeeds::derive(11, i), DEFAULT_DECODE_BUDGET).unwrap();
            let r = tr.decoded.as_ref().unwrap().as_ref().unwrap();
            assert_ne!(r.status, crate::decoder::DecodeStatus::Inconsistent);
            ok += tr.decoded_ok() as usize;
        }
        assert!(ok >= 15, "{ok}/20");
    }
}
