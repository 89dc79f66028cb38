use std::ffi::CStr;
use std::path::Path;
use std::ptr;

use sagt_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        sagt_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn generator(k: usize, n: usize) -> *mut SagtGenerator {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { sagt_generator_new(k, n, &mut g) }, SagtStatus::Ok);
    g
}

#[test]
fn generator_round_trip() {
    let g = generator(2, 3);
    let mut is_mds = false;
    let mut e = 0u16;
    unsafe {
        assert_eq!(sagt_generator_is_mds(g, &mut is_mds), SagtStatus::Ok);
        assert_eq!(sagt_generator_entry(g, 1, 1, &mut e), SagtStatus::Ok);
        assert_eq!(sagt_generator_entry(g, 2, 0, &mut e), SagtStatus::Validation);
        sagt_generator_free(g);
    }
    assert!(is_mds);
    assert!(last_error().contains("out of range"));
}

#[test]
fn invalid_generator_reports_validation() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { sagt_generator_new(4, 3, &mut g) }, SagtStatus::Validation);
    assert!(g.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { sagt_generator_new(1, 3, ptr::null_mut()) }, SagtStatus::NullPointer);
}

#[test]
fn expansion_is_a_bijection_on_any_two_keys() {
    let g = generator(2, 5);
    let bits = 3;
    let mut seen = std::collections::HashSet::new();
    for v in 0u32..64 {
        let src: Vec<u8> = (0..6).map(|b| ((v >> (5 - b)) & 1) as u8).collect();
        let mut out = vec![0u8; 5 * bits];
        let s = unsafe { sagt_expand_keys(g, bits, src.as_ptr(), src.len(), out.as_mut_ptr(), out.len()) };
        assert_eq!(s, SagtStatus::Ok);
        seen.insert(out[3 * bits..5 * bits].to_vec());
    }
    assert_eq!(seen.len(), 64);
    let src = [0u8; 5];
    let mut out = [0u8; 15];
    let s = unsafe { sagt_expand_keys(g, bits, src.as_ptr(), src.len(), out.as_mut_ptr(), out.len()) };
    assert_eq!(s, SagtStatus::Validation);
    unsafe { sagt_generator_free(g) };
}

#[test]
fn codebook_decode_and_leakage() {
    let params = SagtParams { n: 4, k: 1, t: 6, delta: 0.5, rf: 0.25, eps_sec: 0.05, seed: 7 };
    let mut cb = ptr::null_mut();
    assert_eq!(unsafe { sagt_codebook_generate(&params, &mut cb) }, SagtStatus::Ok);
    let (mut m, mut f) = (0usize, 0usize);
    unsafe { sagt_codebook_shape(cb, &mut m, &mut f) };
    assert_eq!((m, f), (2, 2));

    let mut row = [0u8; 6];
    assert_eq!(unsafe { sagt_codebook_row(cb, 2, 1, 0, row.as_mut_ptr(), 6) }, SagtStatus::Ok);
    let f_indices = [1usize, 0, 0, 1];
    let (mut status, mut rank) = (-1, 0u64);
    let s = unsafe { sagt_decode(cb, f_indices.as_ptr(), row.as_ptr(), 6, 1_000_000, &mut status, &mut rank) };
    assert_eq!(s, SagtStatus::Ok);
    assert!(status == 0 || status == 1);
    if status == 0 {
        assert_eq!(rank, 2);
    }

    let g = generator(1, 4);
    let mut mi = -1.0;
    assert_eq!(unsafe { sagt_exact_leakage(cb, g, &mut mi) }, SagtStatus::Ok);
    assert!((0.0..=2.0).contains(&mi));
    unsafe {
        sagt_generator_free(g);
        sagt_codebook_free(cb);
    }
}

#[test]
fn over_budget_decode_maps_to_budget_status() {
    let params = SagtParams { n: 6, k: 2, t: 8, delta: 0.5, rf: 0.0, eps_sec: 0.05, seed: 1 };
    let mut cb = ptr::null_mut();
    unsafe { sagt_codebook_generate(&params, &mut cb) };
    let f = [0usize; 6];
    let y = [1u8; 8];
    let (mut status, mut rank) = (0, 0);
    let s = unsafe { sagt_decode(cb, f.as_ptr(), y.as_ptr(), 8, 1, &mut status, &mut rank) };
    assert_eq!(s, SagtStatus::Budget);
    unsafe { sagt_codebook_free(cb) };
}

#[test]
fn bounds_struct() {
    let mut b = SagtBounds::default();
    assert_eq!(unsafe { sagt_bounds(4, 1, 0.5, 0.0, 0.0, &mut b) }, SagtStatus::Ok);
    assert!((b.converse_sagt - 4.0).abs() < 1e-9);
    assert_eq!(unsafe { sagt_bounds(4, 1, 1.0, 0.0, 0.0, &mut b) }, SagtStatus::Validation);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sagt.h")).unwrap();
    assert!(header.starts_with("#ifndef SAGT_H"));
    for name in [
        "sagt_last_error",
        "sagt_generator_new",
        "sagt_generator_free",
        "sagt_expand_keys",
        "sagt_codebook_generate",
        "sagt_codebook_row",
        "sagt_bounds",
        "sagt_exact_leakage",
        "sagt_decode",
        "typedef struct SagtGenerator SagtGenerator;",
        "SAGT_STATUS_BUDGET = 2",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(&src, "#include \"sagt.h\"\nint main(void) { SagtBounds b; return sagt_bounds(4, 1, 0.5, 0.0, 0.0, &b); }\n").unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = std::process::Command::new(cc)
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
