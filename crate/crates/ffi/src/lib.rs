//! C interface to `cscode`.
//!
//! Objects cross the boundary as opaque handles created by a `*_new` or
//! `*_load` call and released with the matching `*_free`. Every fallible
//! call returns a [`CsStatus`]; on failure the message is kept per thread
//! and read back with [`cs_last_error_message`]. Bit arrays hold one bit
//! per byte. Output buffers are caller-owned: the call writes the needed
//! length to `out_len` and fails with `CS_STATUS_BUFFER_TOO_SMALL` when
//! `out_cap` is short, so a first call with `out_cap = 0` sizes the buffer.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cscode::channel::Modulation;
use cscode::codec_fl::{fl_encode, lut_decode, map_decode, ConcatCodebook, FrameCode};
use cscode::codec_vl::{vl_decode_bitwise, vl_decode_resync, vl_encode, VlCodebook};
use cscode::config::{resolve_fl_codebook, resolve_vl_codebook};
use cscode::constraint::{build_fsm, Constraint};
use cscode::neural::{load_checkpoint, Network};
use cscode::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numeric = 4,
    Io = 5,
    Format = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsModulation {
    Ook = 0,
    Bpsk = 1,
}

impl From<CsModulation> for Modulation {
    fn from(m: CsModulation) -> Self {
        match m {
            CsModulation::Ook => Modulation::Ook,
            CsModulation::Bpsk => Modulation::Bpsk,
        }
    }
}

/// Fixed-length codebook, possibly spanning several frames.
pub struct CsFlCodebook(ConcatCodebook);

/// Variable-length codebook.
pub struct CsVlCodebook(VlCodebook);

/// Trained decoder network.
pub struct CsNetwork(Network);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CsStatus {
    match e {
        Error::Numeric(_) | Error::Training { .. } => CsStatus::Numeric,
        Error::Config(_) => CsStatus::Config,
        Error::Io { .. } => CsStatus::Io,
        Error::Format { .. } | Error::Version { .. } => CsStatus::Format,
        _ => CsStatus::InvalidArgument,
    }
}

struct Fail(CsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type Outcome = Result<(), Fail>;

fn guard(f: impl FnOnce() -> Outcome) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CsStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CsStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T: Copy>(data: &[T], out: *mut T, out_cap: usize, out_len: *mut usize) -> Outcome {
    if out_len.is_null() {
        return Err(null("out_len"));
    }
    *out_len = data.len();
    if data.len() > out_cap {
        return Err(Fail(
            CsStatus::BufferTooSmall,
            format!("need {} elements, buffer holds {out_cap}", data.len()),
        ));
    }
    if !data.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), out, data.len());
    }
    Ok(())
}

unsafe fn emit<T>(value: T, out: *mut *mut T) -> Outcome {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Capacity in bits per symbol of `dcfree:<N>`, `rll:<d>,<k>` or `rll:<d>,inf`.
///
/// # Safety
/// `constraint` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_capacity(constraint: *const c_char, out: *mut f64) -> CsStatus {
    guard(|| {
        let c: Constraint = str_arg(constraint, "constraint")?.parse()?;
        let cap = build_fsm(c)?.capacity()?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = cap;
        Ok(())
    })
}

/// Loads a fixed-length codebook: `builtin:4b6b` or a file path.
/// `frames` of 0 keeps the file's frame count. A non-negative
/// `shuffle_seed` shuffles each frame's mapping; pass -1 for none.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_fl_codebook_load(
    spec: *const c_char,
    frames: usize,
    shuffle_seed: i64,
    out: *mut *mut CsFlCodebook,
) -> CsStatus {
    guard(|| {
        let spec = str_arg(spec, "spec")?;
        let seed = u64::try_from(shuffle_seed).ok();
        let cb = resolve_fl_codebook(spec, frames, seed)?;
        emit(CsFlCodebook(cb), out)
    })
}

/// # Safety
/// `cb` must come from [`cs_fl_codebook_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_fl_codebook_free(cb: *mut CsFlCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Source bits per block.
///
/// # Safety
/// `cb` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cs_fl_codebook_source_len(cb: *const CsFlCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.0.block_source_len())
}

/// Channel bits per block.
///
/// # Safety
/// `cb` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cs_fl_codebook_code_len(cb: *const CsFlCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.0.block_code_len())
}

/// # Safety
/// `cb` must be a live handle; `bits` must hold `len` bytes; `out` must
/// hold `out_cap` bytes; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_fl_encode(
    cb: *const CsFlCodebook,
    bits: *const u8,
    len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        let coded = fl_encode(&cb.0, slice_arg(bits, len, "bits")?)?;
        put(&coded, out, out_cap, out_len)
    })
}

/// Hard-decision table lookup with nearest-Hamming fallback.
///
/// # Safety
/// As for [`cs_fl_encode`].
#[no_mangle]
pub unsafe extern "C" fn cs_fl_lut_decode(
    cb: *const CsFlCodebook,
    bits: *const u8,
    len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        let decoded = lut_decode(&cb.0, slice_arg(bits, len, "bits")?)?;
        put(&decoded, out, out_cap, out_len)
    })
}

/// Minimum Euclidean distance decoding of received channel values.
///
/// # Safety
/// As for [`cs_fl_encode`], with `received` holding `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_fl_map_decode(
    cb: *const CsFlCodebook,
    received: *const f64,
    len: usize,
    modulation: CsModulation,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        let decoded = map_decode(&cb.0, slice_arg(received, len, "received")?, modulation.into())?;
        put(&decoded, out, out_cap, out_len)
    })
}

/// Loads a variable-length codebook: `builtin:rll13`, `builtin:dcfree-vl`
/// or a file path.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_vl_codebook_load(spec: *const c_char, out: *mut *mut CsVlCodebook) -> CsStatus {
    guard(|| {
        let cb = resolve_vl_codebook(str_arg(spec, "spec")?)?;
        emit(CsVlCodebook(cb), out)
    })
}

/// # Safety
/// `cb` must come from [`cs_vl_codebook_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_vl_codebook_free(cb: *mut CsVlCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Longest codeword length.
///
/// # Safety
/// `cb` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cs_vl_codebook_max_len(cb: *const CsVlCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.0.l_max())
}

/// # Safety
/// As for [`cs_fl_encode`].
#[no_mangle]
pub unsafe extern "C" fn cs_vl_encode(
    cb: *const CsVlCodebook,
    state: usize,
    bits: *const u8,
    len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        let (coded, _) = vl_encode(&cb.0, slice_arg(bits, len, "bits")?, state)?;
        put(&coded, out, out_cap, out_len)
    })
}

/// Greedy decoding of error-free input.
///
/// # Safety
/// As for [`cs_fl_encode`].
#[no_mangle]
pub unsafe extern "C" fn cs_vl_decode_bitwise(
    cb: *const CsVlCodebook,
    state: usize,
    bits: *const u8,
    len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        let decoded = vl_decode_bitwise(&cb.0, slice_arg(bits, len, "bits")?, state)?;
        put(&decoded, out, out_cap, out_len)
    })
}

/// Decoding that resynchronises after detection errors. A `window` of 0
/// uses the longest codeword length.
///
/// # Safety
/// As for [`cs_fl_encode`].
#[no_mangle]
pub unsafe extern "C" fn cs_vl_decode_resync(
    cb: *const CsVlCodebook,
    state: usize,
    window: usize,
    bits: *const u8,
    len: usize,
    out: *mut u8,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let cb = handle(cb, "cb")?;
        let window = if window == 0 { cb.0.l_max() } else { window };
        let decoded = vl_decode_resync(&cb.0, slice_arg(bits, len, "bits")?, window, state)?;
        put(&decoded, out, out_cap, out_len)
    })
}

/// Loads a network checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_network_load(path: *const c_char, out: *mut *mut CsNetwork) -> CsStatus {
    guard(|| {
        let net = load_checkpoint(str_arg(path, "path")?)?;
        emit(CsNetwork(net), out)
    })
}

/// # Safety
/// `net` must come from [`cs_network_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_network_free(net: *mut CsNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cs_network_input_width(net: *const CsNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.input_width())
}

/// # Safety
/// `net` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cs_network_output_width(net: *const CsNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.output_width())
}

/// # Safety
/// `net` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cs_network_param_count(net: *const CsNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.count_params())
}

/// Runs one forward pass.
///
/// # Safety
/// `net` must be a live handle; `input` must hold `len` doubles; `out`
/// must hold `out_cap` doubles; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_network_forward(
    net: *const CsNetwork,
    input: *const f64,
    len: usize,
    out: *mut f64,
    out_cap: usize,
    out_len: *mut usize,
) -> CsStatus {
    guard(|| {
        let net = handle(net, "net")?;
        let y = net.0.forward(slice_arg(input, len, "input")?)?;
        put(&y, out, out_cap, out_len)
    })
}
