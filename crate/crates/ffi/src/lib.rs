//! C ABI over the dynpose encoder.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free`. Every call returns a [`DpStatus`]; on failure
//! [`dp_last_error`] gives a message for the calling thread. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dynpose::binarize::binarize_threshold;
use dynpose::dictionary::{
    dictionary_from_text, dictionary_to_text, generate_dictionary, DictionaryParams, PoleDictionary,
};
use dynpose::pipeline::{Encoder, GateConfig};
use dynpose::solver::SolverConfig;
use dynpose::Error;
use ndarray::ArrayView2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    HashMismatch = 4,
    DegenerateDictionary = 5,
    NonFinite = 6,
    Parse = 7,
    Io = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

/// Opaque pole dictionary.
pub struct DpDictionary {
    inner: PoleDictionary,
}

/// Opaque encoder bound to one dictionary.
pub struct DpEncoder {
    inner: Encoder,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

struct Fail(DpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) | Error::ZeroVariance { .. } | Error::Separation(_) => DpStatus::InvalidArgument,
            Error::DimensionMismatch(_) => DpStatus::DimensionMismatch,
            Error::HashMismatch { .. } => DpStatus::HashMismatch,
            Error::DegenerateDictionary(_) => DpStatus::DegenerateDictionary,
            Error::NonFinite(_) => DpStatus::NonFinite,
            Error::Parse(_) => DpStatus::Parse,
            Error::Io(_) => DpStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn fail(status: DpStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DpStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(DpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(DpStatus::NullPointer, format!("{what} is null")))
}

/// Copies `s` plus a terminating NUL into `buf`; `required` always receives
/// the needed size including the NUL.
unsafe fn write_string(s: &str, buf: *mut c_char, cap: usize, required: *mut usize) -> Result<(), Fail> {
    *out_ptr(required, "required")? = s.len() + 1;
    if cap < s.len() + 1 {
        return Err(fail(DpStatus::BufferTooSmall, format!("need {} bytes, have {cap}", s.len() + 1)));
    }
    if buf.is_null() {
        return Err(fail(DpStatus::NullPointer, "buffer is null"));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn trajectory<'a>(data: *const f64, frames: usize, dims: usize) -> Result<ArrayView2<'a, f64>, Fail> {
    if data.is_null() {
        return Err(fail(DpStatus::NullPointer, "data is null"));
    }
    if frames == 0 || dims == 0 {
        return Err(fail(DpStatus::InvalidArgument, "frames and dims must be positive"));
    }
    let len = frames.checked_mul(dims).ok_or_else(|| fail(DpStatus::InvalidArgument, "size overflow"))?;
    let slice = std::slice::from_raw_parts(data, len);
    ArrayView2::from_shape((frames, dims), slice).map_err(|e| fail(DpStatus::InvalidArgument, e.to_string()))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated). `required` receives the size needed.
///
/// # Safety
/// `buf` must point to `cap` writable bytes; `required` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_last_error(buf: *mut c_char, cap: usize, required: *mut usize) -> DpStatus {
    let msg = LAST_ERROR.with(|e| String::from_utf8_lossy(&e.borrow()).into_owned());
    match catch_unwind(AssertUnwindSafe(|| write_string(&msg, buf, cap, required))) {
        Ok(Ok(())) => DpStatus::Ok,
        Ok(Err(Fail(status, _))) => status,
        Err(_) => DpStatus::Internal,
    }
}

/// Static NUL-terminated library version.
#[no_mangle]
pub extern "C" fn dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Default grid dictionary: unit pole, 4 real poles, 80 conjugate pairs.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_default(out: *mut *mut DpDictionary) -> DpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = generate_dictionary(&DictionaryParams::default())?;
        *out = Box::into_raw(Box::new(DpDictionary { inner }));
        Ok(())
    })
}

/// Grid dictionary with explicit counts and magnitude range.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_generate(
    pair_count: usize,
    real_pole_count: usize,
    magnitude_min: f64,
    magnitude_max: f64,
    normalize_columns: bool,
    out: *mut *mut DpDictionary,
) -> DpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let params = DictionaryParams {
            pair_count,
            real_pole_count,
            magnitude_range: (magnitude_min, magnitude_max),
            normalize_columns,
            ..Default::default()
        };
        *out = Box::into_raw(Box::new(DpDictionary { inner: generate_dictionary(&params)? }));
        Ok(())
    })
}

/// Parses a dictionary text record.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_parse(text: *const c_char, out: *mut *mut DpDictionary) -> DpStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if text.is_null() {
            return Err(fail(DpStatus::NullPointer, "text is null"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| fail(DpStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(DpDictionary { inner: dictionary_from_text(s)? }));
        Ok(())
    })
}

/// Serializes `dict` as its text record.
///
/// # Safety
/// `dict` must come from this library; `buf` must point to `cap` writable
/// bytes; `required` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_text(
    dict: *const DpDictionary,
    buf: *mut c_char,
    cap: usize,
    required: *mut usize,
) -> DpStatus {
    guard(|| {
        let d = deref(dict, "dict")?;
        write_string(&dictionary_to_text(&d.inner), buf, cap, required)
    })
}

/// Hex content hash (first 128 bits of SHA-256: 32 characters plus NUL).
///
/// # Safety
/// As [`dp_dictionary_text`].
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_hash(
    dict: *const DpDictionary,
    buf: *mut c_char,
    cap: usize,
    required: *mut usize,
) -> DpStatus {
    guard(|| {
        let d = deref(dict, "dict")?;
        write_string(d.inner.content_hash(), buf, cap, required)
    })
}

/// Pole count (length of a binary code) and atom count (coefficient rows).
///
/// # Safety
/// `dict` must come from this library; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_sizes(
    dict: *const DpDictionary,
    poles: *mut usize,
    atoms: *mut usize,
) -> DpStatus {
    guard(|| {
        let d = deref(dict, "dict")?;
        *out_ptr(poles, "poles")? = d.inner.pole_count();
        *out_ptr(atoms, "atoms")? = d.inner.atom_count();
        Ok(())
    })
}

/// # Safety
/// `dict` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn dp_dictionary_free(dict: *mut DpDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Encoder with reweighted sparse coding and a relative-threshold gate
/// (`floor` 1e-4). The dictionary is copied; `dict` may be freed afterwards.
///
/// # Safety
/// `dict` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dp_encoder_new(
    dict: *const DpDictionary,
    lambda: f64,
    reweight_rounds: usize,
    max_iterations: usize,
    tau_rel: f64,
    out: *mut *mut DpEncoder,
) -> DpStatus {
    guard(|| {
        let d = deref(dict, "dict")?;
        let out = out_ptr(out, "out")?;
        if !(tau_rel > 0.0 && tau_rel < 1.0) {
            return Err(fail(DpStatus::InvalidArgument, format!("tau_rel must lie in (0, 1), got {tau_rel}")));
        }
        let solver = SolverConfig { lambda, reweight_rounds, max_iterations, ..Default::default() };
        let gate = GateConfig::Threshold { tau_rel, floor: dynpose::binarize::DEFAULT_FLOOR };
        let inner = Encoder::new(d.inner.clone(), solver, gate)?;
        *out = Box::into_raw(Box::new(DpEncoder { inner }));
        Ok(())
    })
}

/// # Safety
/// `enc` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn dp_encoder_free(enc: *mut DpEncoder) {
    if !enc.is_null() {
        drop(Box::from_raw(enc));
    }
}

/// Codes a row-major `frames × dims` trajectory jointly and writes one
/// 0/1 byte per dictionary pole, pooling energy over the columns.
///
/// # Safety
/// `data` must hold `frames·dims` doubles; `bits` must hold `bits_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dp_encode_bits(
    enc: *const DpEncoder,
    data: *const f64,
    frames: usize,
    dims: usize,
    bits: *mut u8,
    bits_len: usize,
) -> DpStatus {
    guard(|| {
        let e = deref(enc, "encoder")?;
        let y = trajectory(data, frames, dims)?;
        let poles = e.inner.dictionary().pole_count();
        if bits_len < poles {
            return Err(fail(DpStatus::BufferTooSmall, format!("need {poles} bytes, have {bits_len}")));
        }
        if bits.is_null() {
            return Err(fail(DpStatus::NullPointer, "bits is null"));
        }
        let (_, code) = e.inner.binary_union(y, 0)?;
        let out = std::slice::from_raw_parts_mut(bits, poles);
        for (i, b) in out.iter_mut().enumerate() {
            *b = code.get(i) as u8;
        }
        Ok(())
    })
}

/// Writes the row-major `atoms × dims` normalized-basis coefficients and the
/// final objective value.
///
/// # Safety
/// `data` must hold `frames·dims` doubles; `coefficients` must hold
/// `coefficients_len` doubles; `objective` may be null.
#[no_mangle]
pub unsafe extern "C" fn dp_encode_coefficients(
    enc: *const DpEncoder,
    data: *const f64,
    frames: usize,
    dims: usize,
    coefficients: *mut f64,
    coefficients_len: usize,
    objective: *mut f64,
) -> DpStatus {
    guard(|| {
        let e = deref(enc, "encoder")?;
        let y = trajectory(data, frames, dims)?;
        let need = e.inner.dictionary().atom_count() * dims;
        if coefficients_len < need {
            return Err(fail(DpStatus::BufferTooSmall, format!("need {need} doubles, have {coefficients_len}")));
        }
        if coefficients.is_null() {
            return Err(fail(DpStatus::NullPointer, "coefficients is null"));
        }
        let code = e.inner.code(y)?;
        let out = std::slice::from_raw_parts_mut(coefficients, need);
        for (o, v) in out.iter_mut().zip(code.coefficients.iter()) {
            *o = *v;
        }
        if let Some(obj) = objective.as_mut() {
            *obj = code.objective_value;
        }
        Ok(())
    })
}

/// Thresholds per-pole energies: bit `i` is 1 iff
/// `energy[i] ≥ max(tau_rel · max(energy), floor)`.
///
/// # Safety
/// `energy` and `bits` must each hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn dp_threshold(
    energy: *const f64,
    len: usize,
    tau_rel: f64,
    floor: f64,
    bits: *mut u8,
) -> DpStatus {
    guard(|| {
        if energy.is_null() || bits.is_null() {
            return Err(fail(DpStatus::NullPointer, "energy or bits is null"));
        }
        let values = std::slice::from_raw_parts(energy, len).to_vec();
        let code = binarize_threshold(&dynpose::binarize::PoleEnergy::new(values, None, ""), tau_rel, floor)?;
        let out = std::slice::from_raw_parts_mut(bits, len);
        for (i, b) in out.iter_mut().enumerate() {
            *b = code.get(i) as u8;
        }
        Ok(())
    })
}
