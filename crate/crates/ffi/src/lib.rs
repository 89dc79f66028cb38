//! C ABI over `sagt`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_generate` and released with the matching `*_free`. Every call returns
//! a [`SagtStatus`]; on failure the message is kept per thread and can be
//! read with [`sagt_last_error`]. Bit strings are byte arrays holding 0 or 1.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use sagt::bits::BitRow;
use sagt::bounds::BoundReport;
use sagt::channel::PoolOutcomes;
use sagt::codebook::{Codebook, CodebookParams};
use sagt::decoder::{decode, DecodeStatus};
use sagt::mds::{expand_keys, mds_generator, MdsGenerator};
use sagt::secrecy::exact_leakage;
use sagt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SagtStatus {
    Ok = 0,
    Validation = 1,
    Budget = 2,
    Invariant = 3,
    NullPointer = 4,
    Panic = 5,
}

pub struct SagtGenerator(MdsGenerator);

pub struct SagtCodebook(Codebook);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SagtParams {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub delta: f64,
    pub rf: f64,
    pub eps_sec: f64,
    pub seed: u64,
}

/// Real-valued test counts before rounding up; `INFINITY` when unbounded.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SagtBounds {
    pub sufficient_sagt: f64,
    pub corollary: f64,
    pub converse_sagt: f64,
    pub sufficient_sngt: f64,
    pub converse_sngt: f64,
    pub sufficient_ngt: f64,
    pub converse_ngt: f64,
    pub public_feedback: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SagtStatus {
    match e.exit_code() {
        2 => SagtStatus::Budget,
        3 => SagtStatus::Invariant,
        _ => SagtStatus::Validation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SagtStatus>) -> SagtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SagtStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SagtStatus::Panic
        }
    }
}

fn fail(e: Error) -> SagtStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null() -> SagtStatus {
    set_error("null pointer argument".into());
    SagtStatus::NullPointer
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sagt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sagt_generator_new(k: usize, n: usize, out: *mut *mut SagtGenerator) -> SagtStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let g = mds_generator(k, n).map_err(fail)?;
        *out = Box::into_raw(Box::new(SagtGenerator(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or come from [`sagt_generator_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sagt_generator_free(g: *mut SagtGenerator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live generator and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sagt_generator_entry(g: *const SagtGenerator, row: usize, col: usize, out: *mut u16) -> SagtStatus {
    if g.is_null() || out.is_null() {
        return null();
    }
    let g = &(*g).0;
    guard(|| {
        if row >= g.k() || col >= g.n() {
            return Err(fail(Error::IndexOutOfRange {
                what: "generator entry",
                index: (row * g.n() + col) as u64,
                limit: (g.k() * g.n()) as u64,
            }));
        }
        *out = g.entry(row, col);
        Ok(())
    })
}

/// # Safety
/// `g` must be a live generator and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sagt_generator_is_mds(g: *const SagtGenerator, out: *mut bool) -> SagtStatus {
    if g.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        *out = (*g).0.is_mds();
        Ok(())
    })
}

/// Expand `K` source keys of `key_bits` bits (`source`, `K·key_bits` bytes)
/// into `N` keys written to `out` (`N·key_bits` bytes).
///
/// # Safety
/// Buffers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn sagt_expand_keys(
    g: *const SagtGenerator,
    key_bits: usize,
    source: *const u8,
    source_len: usize,
    out: *mut u8,
    out_len: usize,
) -> SagtStatus {
    if g.is_null() || (source.is_null() && source_len > 0) || (out.is_null() && out_len > 0) {
        return null();
    }
    let g = &(*g).0;
    guard(|| {
        if source_len != g.k() * key_bits {
            return Err(fail(Error::LengthMismatch { expected: g.k() * key_bits, got: source_len }));
        }
        if out_len != g.n() * key_bits {
            return Err(fail(Error::LengthMismatch { expected: g.n() * key_bits, got: out_len }));
        }
        let bytes = if source_len == 0 { &[][..] } else { std::slice::from_raw_parts(source, source_len) };
        let chunks: Vec<Vec<bool>> = if key_bits == 0 {
            vec![Vec::new(); g.k()]
        } else {
            bytes.chunks(key_bits).map(|c| c.iter().map(|&b| b != 0).collect()).collect()
        };
        let keys = expand_keys(&chunks, g).map_err(fail)?;
        if out_len > 0 {
            let dst = std::slice::from_raw_parts_mut(out, out_len);
            for (d, b) in dst.iter_mut().zip(keys.iter().flatten()) {
                *d = u8::from(*b);
            }
        }
        Ok(())
    })
}

fn params_from(p: &SagtParams) -> CodebookParams {
    CodebookParams::new(p.n, p.k, p.t, p.delta, p.rf)
        .with_eps_sec(p.eps_sec)
        .with_seed(p.seed)
}

/// # Safety
/// `params` must be readable and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sagt_codebook_generate(params: *const SagtParams, out: *mut *mut SagtCodebook) -> SagtStatus {
    if params.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let cb = Codebook::generate(&params_from(&*params)).map_err(fail)?;
        *out = Box::into_raw(Box::new(SagtCodebook(cb)));
        Ok(())
    })
}

/// # Safety
/// `cb` must be null or come from [`sagt_codebook_generate`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sagt_codebook_free(cb: *mut SagtCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Sub-bins `M` and codewords per sub-bin `F`.
///
/// # Safety
/// `cb` must be live; `m` and `f` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sagt_codebook_shape(cb: *const SagtCodebook, m: *mut usize, f: *mut usize) -> SagtStatus {
    if cb.is_null() || m.is_null() || f.is_null() {
        return null();
    }
    guard(|| {
        *m = (*cb).0.m();
        *f = (*cb).0.f();
        Ok(())
    })
}

/// Codeword `(item, sub_bin, key)` as `T` bytes.
///
/// # Safety
/// `cb` must be live and `out` valid for `out_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sagt_codebook_row(
    cb: *const SagtCodebook,
    item: usize,
    sub_bin: usize,
    key: usize,
    out: *mut u8,
    out_len: usize,
) -> SagtStatus {
    if cb.is_null() || out.is_null() {
        return null();
    }
    let cb = &(*cb).0;
    guard(|| {
        if out_len != cb.t() {
            return Err(fail(Error::LengthMismatch { expected: cb.t(), got: out_len }));
        }
        let row = cb.row_bits(item, sub_bin, key).map_err(fail)?;
        let dst = std::slice::from_raw_parts_mut(out, out_len);
        for (t, d) in dst.iter_mut().enumerate() {
            *d = u8::from(row.get(t));
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sagt_bounds(n: usize, k: usize, delta: f64, rf: f64, eps: f64, out: *mut SagtBounds) -> SagtStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let r = BoundReport::evaluate(n, k, delta, rf, eps).map_err(fail)?;
        *out = SagtBounds {
            sufficient_sagt: r.sufficient_sagt.value,
            corollary: r.corollary.value,
            converse_sagt: r.converse_sagt.value,
            sufficient_sngt: r.sufficient_sngt.value,
            converse_sngt: r.converse_sngt.value,
            sufficient_ngt: r.sufficient_ngt.value,
            converse_ngt: r.converse_ngt.value,
            public_feedback: r.public.value,
        };
        Ok(())
    })
}

/// Exact `I(W; Z)` in bits for the given codebook.
///
/// # Safety
/// `cb` and `g` must be live; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sagt_exact_leakage(cb: *const SagtCodebook, g: *const SagtGenerator, out: *mut f64) -> SagtStatus {
    if cb.is_null() || g.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        *out = exact_leakage(&(*cb).0, &(*g).0).map_err(fail)?.mi_bits;
        Ok(())
    })
}

/// Decode outcomes `y` (`T` bytes) given every item's key index.
/// `decode_status` receives 0 (unique), 1 (ambiguous) or 2 (inconsistent);
/// `rank` the colex rank of the decoded set when unique.
///
/// # Safety
/// `f_indices` must hold `N` entries, `y` `y_len` bytes; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn sagt_decode(
    cb: *const SagtCodebook,
    f_indices: *const usize,
    y: *const u8,
    y_len: usize,
    budget: u64,
    decode_status: *mut i32,
    rank: *mut u64,
) -> SagtStatus {
    if cb.is_null() || f_indices.is_null() || y.is_null() || decode_status.is_null() || rank.is_null() {
        return null();
    }
    let cb = &(*cb).0;
    guard(|| {
        let f = std::slice::from_raw_parts(f_indices, cb.n());
        let bits: Vec<bool> = std::slice::from_raw_parts(y, y_len).iter().map(|&b| b != 0).collect();
        let y = PoolOutcomes { y: BitRow::from_bools(&bits) };
        let r = decode(cb, f, &y, budget).map_err(fail)?;
        *decode_status = match r.status {
            DecodeStatus::Unique => 0,
            DecodeStatus::Ambiguous => 1,
            DecodeStatus::Inconsistent => 2,
        };
        *rank = r.w_hat.map_or(u64::MAX, |w| w.rank());
        Ok(())
    })
}
