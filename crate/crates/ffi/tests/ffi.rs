use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cscode::neural::{save_checkpoint, Network};
use cscode_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cs_last_error_message()) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn capacity_and_errors() {
    let mut cap = 0.0;
    let st = unsafe { cs_capacity(c("dcfree:5").as_ptr(), &mut cap) };
    assert_eq!(st, CsStatus::Ok);
    assert!((cap - 0.7925).abs() < 5e-4);
    assert!(last_error().is_empty());

    let st = unsafe { cs_capacity(c("rll:3,1").as_ptr(), &mut cap) };
    assert_eq!(st, CsStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let st = unsafe { cs_capacity(ptr::null(), &mut cap) };
    assert_eq!(st, CsStatus::NullPointer);
    assert!(last_error().contains("constraint"));
}

#[test]
fn fixed_length_round_trip() {
    let mut cb = ptr::null_mut();
    assert_eq!(
        unsafe { cs_fl_codebook_load(c("builtin:4b6b").as_ptr(), 2, 7, &mut cb) },
        CsStatus::Ok
    );
    assert_eq!(unsafe { cs_fl_codebook_source_len(cb) }, 8);
    assert_eq!(unsafe { cs_fl_codebook_code_len(cb) }, 12);
    let src = [1u8, 0, 0, 1, 0, 1, 1, 1];
    let mut coded = [0u8; 12];
    let mut n = 0;
    let st = unsafe { cs_fl_encode(cb, src.as_ptr(), 8, coded.as_mut_ptr(), 12, &mut n) };
    assert_eq!((st, n), (CsStatus::Ok, 12));

    let mut back = [0u8; 8];
    let st = unsafe { cs_fl_lut_decode(cb, coded.as_ptr(), 12, back.as_mut_ptr(), 8, &mut n) };
    assert_eq!((st, back), (CsStatus::Ok, src));

    let rx: Vec<f64> = coded.iter().map(|&b| f64::from(b)).collect();
    back = [0; 8];
    let st = unsafe {
        cs_fl_map_decode(cb, rx.as_ptr(), 12, CsModulation::Ook, back.as_mut_ptr(), 8, &mut n)
    };
    assert_eq!((st, back), (CsStatus::Ok, src));

    let st = unsafe { cs_fl_encode(cb, src.as_ptr(), 3, coded.as_mut_ptr(), 12, &mut n) };
    assert_eq!(st, CsStatus::InvalidArgument);
    unsafe { cs_fl_codebook_free(cb) };
}

#[test]
fn short_buffer_reports_needed_length() {
    let mut cb = ptr::null_mut();
    unsafe { cs_vl_codebook_load(c("builtin:rll13").as_ptr(), &mut cb) };
    let src = [0u8, 1, 1, 1, 0];
    let mut n = 0;
    let st = unsafe { cs_vl_encode(cb, 0, src.as_ptr(), 5, ptr::null_mut(), 0, &mut n) };
    assert_eq!(st, CsStatus::BufferTooSmall);
    let mut out = vec![0u8; n];
    let st = unsafe { cs_vl_encode(cb, 0, src.as_ptr(), 5, out.as_mut_ptr(), n, &mut n) };
    assert_eq!(st, CsStatus::Ok);
    let mut dec = [0u8; 5];
    let st = unsafe { cs_vl_decode_bitwise(cb, 0, out.as_ptr(), out.len(), dec.as_mut_ptr(), 5, &mut n) };
    assert_eq!((st, dec), (CsStatus::Ok, src));
    assert_eq!(unsafe { cs_vl_codebook_max_len(cb) }, 4);
    unsafe { cs_vl_codebook_free(cb) };
}

#[test]
fn network_forward_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let mut net = Network::mlp(6, &[8], 4).unwrap();
    net.xavier_init(9);
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&net, &path).unwrap();

    let mut h = ptr::null_mut();
    let p = c(path.to_str().unwrap());
    assert_eq!(unsafe { cs_network_load(p.as_ptr(), &mut h) }, CsStatus::Ok);
    assert_eq!(unsafe { cs_network_param_count(h) }, net.count_params());
    assert_eq!(unsafe { (cs_network_input_width(h), cs_network_output_width(h)) }, (6, 4));
    let x = [0.5, -1.0, 2.0, 0.0, 1.5, -0.25];
    let mut y = [0.0; 4];
    let mut n = 0;
    let st = unsafe { cs_network_forward(h, x.as_ptr(), 6, y.as_mut_ptr(), 4, &mut n) };
    assert_eq!(st, CsStatus::Ok);
    assert_eq!(y.to_vec(), net.forward(&x).unwrap());
    let st = unsafe { cs_network_forward(h, x.as_ptr(), 5, y.as_mut_ptr(), 4, &mut n) };
    assert_eq!(st, CsStatus::InvalidArgument);
    unsafe { cs_network_free(h) };

    let missing = c(dir.path().join("none.ckpt").to_str().unwrap());
    assert_eq!(unsafe { cs_network_load(missing.as_ptr(), &mut h) }, CsStatus::Io);
}

#[test]
fn free_accepts_null() {
    unsafe {
        cs_fl_codebook_free(ptr::null_mut());
        cs_vl_codebook_free(ptr::null_mut());
        cs_network_free(ptr::null_mut());
        assert_eq!(cs_network_param_count(ptr::null()), 0);
    }
}

fn artifact_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/cscode.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["cs_capacity", "cs_fl_encode", "cs_vl_decode_resync", "cs_network_forward", "cs_last_error_message"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let lib_dir = artifact_dir();
    if !lib_dir.join("libcscode_ffi.so").exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C build: no shared library or C compiler");
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lcscode_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert!(run.status.success(), "C smoke test exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
