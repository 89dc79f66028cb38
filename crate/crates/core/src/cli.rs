//! Experiment harness behind the `sagt` binary.
//!
//! Every command returns its CSV (or report) as a string so output is a pure
//! function of the configuration; the binary only decides where it goes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::bits::BitRow;
use crate::bounds::{sufficient_sagt, BoundReport, BOUND_CSV_HEADER};
use crate::channel::pool;
use crate::codebook::{derive_mf, Codebook, CodebookParams, DEFAULT_BUDGET_BITS, DEFAULT_EPS_SEC};
use crate::decoder::{decode, decode_oracle, search_size, DecodeStatus, DEFAULT_DECODE_BUDGET};
use crate::error::{Error, Result};
use crate::gf::GaloisField;
use crate::mds::{expand_keys, key_from_value, key_value, mds_generator, MdsGenerator};
use crate::protocol::{random_defectives, run_round, run_session, RoundSeeds, SessionParams};
use crate::rng::{derive_seed, stream, Domain};
use crate::secrecy::{
    compare_leakage, monte_carlo_leakage, DEFAULT_LEAKAGE_BUDGET, LEAKAGE_CSV_HEADER,
};
use crate::subset::{Combinations, DefectiveIndex};

pub const SIMULATE_CSV_HEADER: &str = "T,trials,errors,error_rate,mean_candidates,status";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub t: Option<usize>,
    pub t_sweep: Vec<usize>,
    /// `(low, high, points)`: sweep `T` over multiples of the sufficiency bound.
    pub t_scale: Option<(f64, f64, usize)>,
    pub delta: Vec<f64>,
    pub rf: Vec<f64>,
    pub eps: f64,
    pub eps_sec: f64,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Decoder search cap `C(N,K)·M^K`.
    pub budget: u64,
    /// Exact leakage enumeration cap.
    pub leakage_budget: f64,
    pub rounds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: vec![50],
            k: vec![2],
            t: None,
            t_sweep: Vec::new(),
            t_scale: None,
            delta: vec![0.5],
            rf: vec![0.25],
            eps: 0.2,
            eps_sec: DEFAULT_EPS_SEC,
            trials: 500,
            seed: 0,
            out: None,
            threads: 0,
            budget: DEFAULT_DECODE_BUDGET,
            leakage_budget: DEFAULT_LEAKAGE_BUDGET,
            rounds: 1,
        }
    }
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value for {key}: {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Parse(format!("{key} needs at least one value")));
    }
    Ok(items)
}

impl ExperimentConfig {
    /// Set one field from its textual form. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim().replace('_', "-").as_str() {
            "n" => self.n = parse_list(key, value)?,
            "k" => self.k = parse_list(key, value)?,
            "t" => self.t = Some(parse_one(key, value)?),
            "t-sweep" => self.t_sweep = parse_list(key, value)?,
            "t-scale" => {
                let v: Vec<f64> = parse_list(key, value)?;
                if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
                    return Err(Error::Parse("t-scale is low,high,points".into()));
                }
                self.t_scale = Some((v[0], v[1], v[2] as usize));
            }
            "delta" => self.delta = parse_list(key, value)?,
            "rf" => self.rf = parse_list(key, value)?,
            "eps" => self.eps = parse_one(key, value)?,
            "eps-sec" => self.eps_sec = parse_one(key, value)?,
            "trials" => self.trials = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "threads" => self.threads = parse_one(key, value)?,
            "budget" => self.budget = parse_one::<f64>(key, value)? as u64,
            "leakage-budget" => self.leakage_budget = parse_one(key, value)?,
            "rounds" => self.rounds = parse_one(key, value)?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Apply a `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", no + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_file_text(&text)
    }

    fn single<T: Copy>(name: &str, v: &[T]) -> Result<T> {
        match v {
            [x] => Ok(*x),
            _ => Err(Error::invalid(format!("{name} takes a single value for this command"))),
        }
    }

    fn point(&self) -> Result<(usize, usize, f64, f64)> {
        Ok((
            Self::single("N", &self.n)?,
            Self::single("K", &self.k)?,
            Self::single("delta", &self.delta)?,
            Self::single("Rf", &self.rf)?,
        ))
    }

    /// The tests-per-round points of a simulate or audit run.
    pub fn t_points(&self) -> Result<Vec<usize>> {
        if !self.t_sweep.is_empty() {
            return Ok(self.t_sweep.clone());
        }
        if let Some(t) = self.t {
            return Ok(vec![t]);
        }
        let (n, k, delta, rf) = self.point()?;
        let bound = sufficient_sagt(n, k, delta, rf, self.eps)?;
        if bound.is_unbounded() {
            return Err(Error::invalid("no finite sufficiency bound for these parameters"));
        }
        let base = bound.tests().max(1) as f64;
        match self.t_scale {
            None => Ok(vec![base as usize]),
            Some((lo, hi, points)) => Ok(scaled_points(base, lo, hi, points)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.k.is_empty() || self.delta.is_empty() || self.rf.is_empty() {
            return Err(Error::invalid("parameter lists must be non-empty"));
        }
        if self.t_sweep.contains(&0) || self.t == Some(0) {
            return Err(Error::invalid("T must be at least 1"));
        }
        if let Some((lo, hi, _)) = self.t_scale {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::invalid("t-scale needs 0 < low <= high"));
            }
        }
        for &n in &self.n {
            for &k in &self.k {
                for &delta in &self.delta {
                    for &rf in &self.rf {
                        CodebookParams::new(n, k, 1, delta, rf).with_eps_sec(self.eps_sec).validate()?;
                    }
                }
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be >= 0, got {}", self.eps)));
        }
        Ok(())
    }

    fn codebook_params(&self, t: usize) -> Result<CodebookParams> {
        let (n, k, delta, rf) = self.point()?;
        let p = CodebookParams::new(n, k, t, delta, rf).with_eps_sec(self.eps_sec);
        p.validate()?;
        Ok(p)
    }

    /// Run `f` on a pool with the configured number of threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// `points` values of `⌈factor · base⌉` for factors evenly spaced in
/// `[low, high]`.
pub fn scaled_points(base: f64, low: f64, high: f64, points: usize) -> Vec<usize> {
    (0..points)
        .map(|i| {
            let f = if points == 1 {
                low
            } else {
                low + (high - low) * i as f64 / (points - 1) as f64
            };
            ((f * base - 1e-9).ceil() as usize).max(1)
        })
        .collect()
}

/// One row per `(N, K, δ, R_f)` grid point.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let mut out = String::from(BOUND_CSV_HEADER);
    out.push('\n');
    for &n in &cfg.n {
        for &k in &cfg.k {
            for &delta in &cfg.delta {
                for &rf in &cfg.rf {
                    out.push_str(&BoundReport::evaluate(n, k, delta, rf, cfg.eps)?.csv_row());
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t: usize,
    pub trials: u64,
    pub errors: u64,
    pub mean_candidates: f64,
    pub status: &'static str,
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn error_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }

    pub fn csv_row(&self, timing: bool) -> String {
        let mut s = format!(
            "{},{},{},{:.6},{:.3},{}",
            self.t,
            self.trials,
            self.errors,
            self.error_rate(),
            self.mean_candidates,
            self.status
        );
        if timing {
            let _ = write!(s, ",{:.3}", self.wall_time_s);
        }
        s
    }
}

/// Outcome of one seeded trial: decoded correctly, and decoder candidates.
fn simulate_trial(cfg: &ExperimentConfig, t: usize, i: u64) -> Result<(bool, u64)> {
    let mut params = cfg.codebook_params(t)?;
    params.seed = derive_seed(cfg.seed, Domain::Codebook, i);
    let cb = Codebook::generate_with_budget(&params, DEFAULT_BUDGET_BITS)?;
    let g = mds_generator(params.k, params.n)?;
    let w = random_defectives(params.n, params.k, cfg.seed, i)?;
    let seeds = RoundSeeds::derive(cfg.seed, i);
    let tr = run_round(&params, &cb, &g, &w, &seeds, cfg.budget)?;
    let ok = tr.decoded_ok();
    match tr.decoded {
        Some(Ok(r)) => Ok((ok, r.candidates)),
        Some(Err(e)) => Err(e),
        None => Ok((false, 0)),
    }
}

/// Reliability sweep. Trial `i` uses the same codebook seed, defective set
/// and round seeds at every `T`, so the sweep points are paired.
pub fn simulate_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let points = cfg.t_points()?;
    cfg.install(|| {
        points
            .iter()
            .map(|&t| {
                let start = Instant::now();
                let params = cfg.codebook_params(t)?;
                let shape = derive_mf(&params);
                let bits = params.n as f64 * shape.m as f64 * shape.f as f64 * t as f64;
                if search_size(params.n, params.k, shape.m as usize) > cfg.budget as f64
                    || bits > DEFAULT_BUDGET_BITS as f64
                {
                    return Ok(SweepRow {
                        t,
                        trials: 0,
                        errors: 0,
                        mean_candidates: 0.0,
                        status: "skipped",
                        wall_time_s: start.elapsed().as_secs_f64(),
                    });
                }
                let results: Vec<Result<(bool, u64)>> =
                    (0..cfg.trials).into_par_iter().map(|i| simulate_trial(cfg, t, i)).collect();
                let mut errors = 0;
                let mut candidates = 0u64;
                for r in results {
                    let (ok, c) = r?;
                    errors += u64::from(!ok);
                    candidates += c;
                }
                Ok(SweepRow {
                    t,
                    trials: cfg.trials,
                    errors,
                    mean_candidates: candidates as f64 / cfg.trials as f64,
                    status: "ok",
                    wall_time_s: start.elapsed().as_secs_f64(),
                })
            })
            .collect()
    })?
}

pub fn cmd_simulate(cfg: &ExperimentConfig, timing: bool) -> Result<String> {
    let rows = simulate_rows(cfg)?;
    let mut out = String::from(SIMULATE_CSV_HEADER);
    if timing {
        out.push_str(",wall_time_s");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row(timing));
        out.push('\n');
    }
    Ok(out)
}

/// Multi-round session: the first round without keys, then rounds keyed by
/// the bits streamed during the previous one. Returns the round log and the
/// full transcripts.
pub fn cmd_session(cfg: &ExperimentConfig) -> Result<(String, String)> {
    cfg.validate()?;
    let (n, k, delta, rf) = cfg.point()?;
    let t = *cfg.t_points()?.first().expect("non-empty");
    let mut sp = SessionParams::new(n, k, t, delta, rf, cfg.eps).with_seed(cfg.seed);
    sp.eps_sec = cfg.eps_sec;
    sp.decode_budget = cfg.budget;
    let ws: Vec<DefectiveIndex> = (0..cfg.rounds as u64)
        .map(|r| random_defectives(n, k, cfg.seed, r))
        .collect::<Result<_>>()?;
    let report = cfg.install(|| run_session(&sp, cfg.rounds, &ws))??;
    let mut log = report.log();
    let _ = writeln!(log, "# total_tests={} amortized={:.3}", report.total_tests(), report.amortized_tests());
    let transcripts = report
        .rounds
        .iter()
        .map(|r| r.dump())
        .collect::<Vec<_>>()
        .join("\n");
    Ok((log, transcripts))
}

/// Leakage rows for the keyed scheme and its unkeyed baseline at every `T`.
pub fn cmd_audit(cfg: &ExperimentConfig, monte_carlo: bool) -> Result<String> {
    cfg.validate()?;
    let points = cfg.t_points()?;
    let mut out = String::from(LEAKAGE_CSV_HEADER);
    out.push('\n');
    let rows: Vec<Result<Vec<String>>> = cfg.install(|| {
        points
            .iter()
            .map(|&t| {
                let params = cfg.codebook_params(t)?.with_seed(derive_seed(cfg.seed, Domain::Audit, t as u64));
                let cb = Codebook::generate(&params)?;
                let g = mds_generator(params.k, params.n)?;
                match compare_exact(&cb, &g, cfg.leakage_budget) {
                    Ok(rows) => Ok(rows),
                    Err(Error::BudgetExceeded { .. }) if monte_carlo => {
                        let trials = cfg.trials.max(crate::secrecy::MIN_MC_TRIALS);
                        Ok(vec![monte_carlo_leakage(&params, trials)?.csv_row()])
                    }
                    Err(e) => Err(e),
                }
            })
            .collect()
    })?;
    for r in rows {
        for line in r? {
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out)
}

fn compare_exact(cb: &Codebook, g: &MdsGenerator, budget: f64) -> Result<Vec<String>> {
    crate::secrecy::exact_leakage_with_budget(cb, g, budget)?;
    let c = compare_leakage(cb, g)?;
    Ok(vec![c.keyed.csv_row(), c.unprotected.csv_row()])
}

/// Write the audited codebook of the first `T` point as a binary dump.
pub fn dump_audit_codebook(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let t = *cfg.t_points()?.first().expect("non-empty");
    let params = cfg.codebook_params(t)?.with_seed(derive_seed(cfg.seed, Domain::Audit, t as u64));
    let cb = Codebook::generate(&params)?;
    let file = std::fs::File::create(path)?;
    cb.write_dump(std::io::BufWriter::new(file))
}

pub fn cmd_mds_dump(cfg: &ExperimentConfig) -> Result<String> {
    let n = ExperimentConfig::single("N", &cfg.n)?;
    let k = ExperimentConfig::single("K", &cfg.k)?;
    Ok(mds_generator(k, n)?.to_text())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfcheckReport {
    pub checks: Vec<CheckResult>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<18} {}  {:>8.3}s  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.seconds,
                c.detail
            );
        }
        let _ = writeln!(s, "{}", if self.passed() { "all checks passed" } else { "selfcheck FAILED" });
        s
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> std::result::Result<String, String>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn check_field_axioms() -> std::result::Result<String, String> {
    for m in 1..=16u32 {
        let f = GaloisField::get(m).map_err(|e| e.to_string())?;
        let size = f.size();
        let step = if m <= 6 { 1 } else { (size / 61).max(1) };
        let sample: Vec<u16> = (0..size).step_by(step as usize).map(|x| x as u16).collect();
        for &a in &sample {
            if a != 0 && f.mul(a, f.inv(a).ok_or("missing inverse")?) != 1 {
                return Err(format!("GF(2^{m}): {a} has no inverse"));
            }
            for &b in &sample {
                if f.mul(a, b) != f.mul(b, a) {
                    return Err(format!("GF(2^{m}): multiplication not commutative"));
                }
                for &c in sample.iter().take(8) {
                    if f.mul(a, f.add(b, c)) != f.add(f.mul(a, b), f.mul(a, c)) {
                        return Err(format!("GF(2^{m}): distributivity fails at {a},{b},{c}"));
                    }
                }
            }
        }
    }
    Ok("GF(2^m), m = 1..16".into())
}

fn check_mds(corrupt: bool) -> std::result::Result<String, String> {
    let mut count = 0;
    for n in 1..=12 {
        for k in 1..=n {
            let mut g = mds_generator(k, n).map_err(|e| e.to_string())?;
            if corrupt && k == 2 && n == 4 {
                g.set_entry(0, 1, 0);
                g.set_entry(1, 1, 0);
            }
            if let Some(bad) = g.singular_subsets().first() {
                return Err(format!("K={k} N={n}: columns {bad:?} are dependent"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} generators, 1 <= K <= N <= 12"))
}

/// Every `K`-subset of expanded keys takes each value exactly equally often.
fn check_key_uniformity() -> std::result::Result<String, String> {
    let mut cases = 0;
    for (k, n) in [(1, 4), (2, 3), (2, 5), (3, 7)] {
        let g = mds_generator(k, n).map_err(|e| e.to_string())?;
        let widths: &[usize] = if n == 3 { &[1, 2, 3, 4] } else { &[3, 4] };
        for &bits in widths {
            let total = 1u64 << (k * bits);
            for subset in Combinations::new(n, k) {
                let mut counts = BTreeMap::new();
                for v in 0..total {
                    let src: Vec<_> = (0..k)
                        .map(|i| key_from_value((v >> (i * bits)) & ((1 << bits) - 1), bits))
                        .collect();
                    let keys = expand_keys(&src, &g).map_err(|e| e.to_string())?;
                    let image: Vec<u64> = subset.iter().map(|&j| key_value(&keys[j])).collect();
                    *counts.entry(image).or_insert(0u64) += 1;
                }
                if counts.len() as u64 != total || counts.values().any(|&c| c != 1) {
                    return Err(format!("K={k} N={n} S_K={bits}: keys {subset:?} not uniform"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} key subsets"))
}

fn check_decoder_oracle(instances: u64) -> std::result::Result<String, String> {
    let mut rng = stream(0x5e1f, Domain::Audit, &[]);
    for i in 0..instances {
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=2.min(n));
        let t = rng.gen_range(1..=12);
        let m = 1 << rng.gen_range(0..=2);
        let f = 1 << rng.gen_range(0..=2);
        let p = CodebookParams::new(n, k, t, 0.5, 0.0).with_seed(i);
        let cb = Codebook::generate_shape(&p, m, f, f.trailing_zeros(), DEFAULT_BUDGET_BITS)
            .map_err(|e| e.to_string())?;
        let f_indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..f as usize)).collect();
        let w = random_defectives(n, k, i, 0).map_err(|e| e.to_string())?;
        let rows: Vec<BitRow> = w
            .items()
            .iter()
            .map(|&j| cb.row_bits(j, rng.gen_range(0..m as usize), f_indices[j]))
            .collect::<Result<_>>()
            .map_err(|e| e.to_string())?;
        let y = pool(&rows).map_err(|e| e.to_string())?;
        let a = decode(&cb, &f_indices, &y, DEFAULT_DECODE_BUDGET).map_err(|e| e.to_string())?;
        let b = decode_oracle(&cb, &f_indices, &y).map_err(|e| e.to_string())?;
        if a.status != b.status || a.w_hat != b.w_hat {
            return Err(format!("instance {i}: {:?} vs {:?}", a.status, b.status));
        }
        if a.status == DecodeStatus::Inconsistent {
            return Err(format!("instance {i}: planted set not found"));
        }
    }
    Ok(format!("{instances} random instances"))
}

/// Release gate. `corrupt_generator` zeroes a generator column before the
/// MDS sweep, which must then fail.
pub fn cmd_selfcheck(corrupt_generator: bool) -> SelfcheckReport {
    SelfcheckReport {
        checks: vec![
            timed("field-axioms", check_field_axioms),
            timed("mds-invertibility", || check_mds(corrupt_generator)),
            timed("key-uniformity", check_key_uniformity),
            timed("decoder-oracle", || check_decoder_oracle(300)),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: vec![10],
            k: vec![2],
            t_sweep: vec![12, 20],
            trials: 40,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn config_file_and_overrides() {
        let mut c = ExperimentConfig::default();
        c.apply_file_text("# grid\nn = 10,20\nk=2\n\ndelta=0.3 # comment\neps_sec=0.1\n").unwrap();
        assert_eq!(c.n, vec![10, 20]);
        assert_eq!(c.delta, vec![0.3]);
        assert_eq!(c.eps_sec, 0.1);
        c.set("n", "7").unwrap();
        assert_eq!(c.n, vec![7]);
        assert!(c.apply_file_text("bogus=1").is_err());
        assert!(c.apply_file_text("n").is_err());
        assert!(c.set("n", "").is_err());
    }

    #[test]
    fn bounds_grid_shape() {
        let mut c = ExperimentConfig::default();
        c.set("n", "50,100").unwrap();
        c.set("delta", "0.3,0.6").unwrap();
        let csv = cmd_bounds(&c).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv, cmd_bounds(&c).unwrap());
        c.set("delta", "1").unwrap();
        assert_eq!(cmd_bounds(&c).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn scaled_sweep_points() {
        assert_eq!(scaled_points(20.0, 0.5, 1.5, 3), vec![10, 20, 30]);
        assert_eq!(scaled_points(7.0, 1.0, 1.0, 1), vec![7]);
    }

    #[test]
    fn simulate_rejects_zero_trials() {
        let c = ExperimentConfig { trials: 0, ..small() };
        assert_eq!(cmd_simulate(&c, false).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn simulate_independent_of_threads() {
        let a = cmd_simulate(&ExperimentConfig { threads: 1, ..small() }, false).unwrap();
        let b = cmd_simulate(&ExperimentConfig { threads: 3, ..small() }, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 3);
    }

    #[test]
    fn simulate_marks_oversized_points() {
        let c = ExperimentConfig { budget: 10, ..small() };
        let csv = cmd_simulate(&c, false).unwrap();
        assert!(csv.lines().skip(1).all(|l| l.ends_with("skipped")));
    }

    #[test]
    fn audit_zero_leakage_without_observation() {
        let c = ExperimentConfig {
            n: vec![4],
            k: vec![1],
            delta: vec![0.0],
            rf: vec![0.0],
            t_sweep: vec![4, 6],
            ..Default::default()
        };
        let csv = cmd_audit(&c, false).unwrap();
        assert_eq!(csv.lines().count(), 5);
        for line in csv.lines().skip(1) {
            let mi: f64 = line.split(',').nth(8).unwrap().parse().unwrap();
            assert_eq!(mi, 0.0);
        }
    }

    #[test]
    fn audit_over_budget_needs_fallback() {
        let c = ExperimentConfig {
            n: vec![6],
            k: vec![2],
            t_sweep: vec![8],
            leakage_budget: 100.0,
            trials: 1000,
            ..Default::default()
        };
        assert_eq!(cmd_audit(&c, false).unwrap_err().exit_code(), 2);
        let csv = cmd_audit(&c, true).unwrap();
        assert!(csv.lines().nth(1).unwrap().contains("monte-carlo"));
    }

    #[test]
    fn selfcheck_passes_and_detects_corruption() {
        let ok = cmd_selfcheck(false);
        assert!(ok.passed(), "{}", ok.render());
        assert_eq!(ok.checks.len(), 4);
        let bad = cmd_selfcheck(true);
        assert!(!bad.passed());
        let mds = bad.checks.iter().find(|c| c.name == "mds-invertibility").unwrap();
        assert!(!mds.passed);
        assert!(mds.detail.contains("K=2 N=4"));
        assert!(bad.render().contains("selfcheck FAILED"));
    }

    #[test]
    fn session_log_has_one_line_per_round() {
        let c = ExperimentConfig {
            n: vec![12],
            t: Some(14),
            delta: vec![0.4],
            rounds: 3,
            ..Default::default()
        };
        let (log, transcripts) = cmd_session(&c).unwrap();
        assert_eq!(log.lines().count(), 5);
        assert_eq!(transcripts.matches("round=").count(), 3);
    }
}
