use std::ffi::{CStr, CString};
use std::ptr;

use dynpose::dictionary::{build_vandermonde, generate_dictionary, DictionaryParams};
use dynpose::pipeline::{Encoder, GateConfig};
use dynpose::solver::SolverConfig;
use dynpose_ffi::*;

fn last_error() -> String {
    let mut need = 0usize;
    unsafe { dp_last_error(ptr::null_mut(), 0, &mut need) };
    let mut buf = vec![0 as std::ffi::c_char; need];
    assert_eq!(unsafe { dp_last_error(buf.as_mut_ptr(), need, &mut need) }, DpStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

fn default_dict() -> *mut DpDictionary {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { dp_dictionary_default(&mut d) }, DpStatus::Ok);
    assert!(!d.is_null());
    d
}

fn text_of(d: *const DpDictionary) -> String {
    let mut need = 0usize;
    assert_eq!(unsafe { dp_dictionary_text(d, ptr::null_mut(), 0, &mut need) }, DpStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; need];
    assert_eq!(unsafe { dp_dictionary_text(d, buf.as_mut_ptr(), need, &mut need) }, DpStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

#[test]
fn default_dictionary_sizes() {
    let d = default_dict();
    let (mut poles, mut atoms) = (0, 0);
    assert_eq!(unsafe { dp_dictionary_sizes(d, &mut poles, &mut atoms) }, DpStatus::Ok);
    assert_eq!((poles, atoms), (85, 165));
    unsafe { dp_dictionary_free(d) };
}

#[test]
fn text_roundtrip_keeps_hash() {
    let d = default_dict();
    let text = CString::new(text_of(d)).unwrap();
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { dp_dictionary_parse(text.as_ptr(), &mut back) }, DpStatus::Ok);
    let hash = |d| {
        let mut buf = [0 as std::ffi::c_char; 33];
        let mut need = 0;
        assert_eq!(unsafe { dp_dictionary_hash(d, buf.as_mut_ptr(), 33, &mut need) }, DpStatus::Ok);
        assert_eq!(need, 33);
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
    };
    let expected = generate_dictionary(&DictionaryParams::default()).unwrap().content_hash().to_owned();
    assert_eq!(hash(d), expected);
    assert_eq!(hash(back), expected);
    unsafe {
        dp_dictionary_free(d);
        dp_dictionary_free(back);
    }
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { dp_dictionary_generate(4, 0, 1.2, 0.9, true, &mut d) }, DpStatus::InvalidArgument);
    assert!(d.is_null());
    assert!(!last_error().is_empty());
    let junk = CString::new("not a dictionary").unwrap();
    assert_eq!(unsafe { dp_dictionary_parse(junk.as_ptr(), &mut d) }, DpStatus::Parse);
    assert_eq!(unsafe { dp_dictionary_parse(ptr::null(), &mut d) }, DpStatus::NullPointer);
    assert_eq!(unsafe { dp_dictionary_default(ptr::null_mut()) }, DpStatus::NullPointer);
    assert!(last_error().contains("null"));
    let (mut a, mut b) = (0, 0);
    assert_eq!(unsafe { dp_dictionary_sizes(ptr::null(), &mut a, &mut b) }, DpStatus::NullPointer);
}

#[test]
fn encoder_rejects_bad_config() {
    let d = default_dict();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { dp_encoder_new(d, -1.0, 2, 300, 0.05, &mut e) }, DpStatus::InvalidArgument);
    assert_eq!(unsafe { dp_encoder_new(d, 0.2, 2, 300, 1.5, &mut e) }, DpStatus::InvalidArgument);
    assert!(e.is_null());
    unsafe { dp_dictionary_free(d) };
}

#[test]
fn bits_match_library_encoder() {
    let d = default_dict();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { dp_encoder_new(d, 0.2, 2, 100, 0.05, &mut e) }, DpStatus::Ok);
    unsafe { dp_dictionary_free(d) };
    let (frames, dims) = (20, 3);
    let data: Vec<f64> = (0..frames * dims)
        .map(|i| {
            let (t, c) = ((i / dims) as f64, (i % dims) as f64);
            (0.3 * t + c).cos() + 0.5 * (0.97f64).powf(t) * (c - 1.0)
        })
        .collect();
    let mut bits = vec![0u8; 85];
    assert_eq!(unsafe { dp_encode_bits(e, data.as_ptr(), frames, dims, bits.as_mut_ptr(), 85) }, DpStatus::Ok);
    let dict = generate_dictionary(&DictionaryParams::default()).unwrap();
    let solver = SolverConfig { lambda: 0.2, reweight_rounds: 2, max_iterations: 100, ..Default::default() };
    let enc = Encoder::new(dict, solver, GateConfig::default()).unwrap();
    let y = ndarray::Array2::from_shape_vec((frames, dims), data.clone()).unwrap();
    let (code, want) = enc.binary_union(y.view(), 0).unwrap();
    assert_eq!(bits.iter().map(|&b| b == 1).collect::<Vec<_>>(), want.to_bools());
    assert!(bits.contains(&1));

    let mut coef = vec![0.0; 165 * dims];
    let mut obj = 0.0;
    assert_eq!(
        unsafe { dp_encode_coefficients(e, data.as_ptr(), frames, dims, coef.as_mut_ptr(), coef.len(), &mut obj) },
        DpStatus::Ok
    );
    assert_eq!(obj, code.objective_value);
    assert_eq!(coef, code.coefficients.iter().cloned().collect::<Vec<_>>());
    // residual from the returned coefficients matches the objective's data term
    let p = build_vandermonde(enc.dictionary(), frames).unwrap();
    let c = ndarray::Array2::from_shape_vec((165, dims), coef).unwrap();
    let r = &y - &p.entries().dot(&c);
    assert!(r.iter().map(|v| v * v).sum::<f64>() <= obj);
    unsafe { dp_encoder_free(e) };
}

#[test]
fn encode_checks_buffers() {
    let d = default_dict();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { dp_encoder_new(d, 0.2, 0, 20, 0.05, &mut e) }, DpStatus::Ok);
    let data = [1.0; 10];
    let mut bits = vec![0u8; 10];
    assert_eq!(unsafe { dp_encode_bits(e, data.as_ptr(), 10, 1, bits.as_mut_ptr(), 10) }, DpStatus::BufferTooSmall);
    assert_eq!(unsafe { dp_encode_bits(e, ptr::null(), 10, 1, bits.as_mut_ptr(), 10) }, DpStatus::NullPointer);
    assert_eq!(unsafe { dp_encode_bits(e, data.as_ptr(), 0, 1, bits.as_mut_ptr(), 10) }, DpStatus::InvalidArgument);
    let nan = [f64::NAN; 4];
    let mut big = vec![0u8; 85];
    assert_eq!(unsafe { dp_encode_bits(e, nan.as_ptr(), 4, 1, big.as_mut_ptr(), 85) }, DpStatus::NonFinite);
    let mut coef = vec![0.0; 3];
    assert_eq!(
        unsafe { dp_encode_coefficients(e, data.as_ptr(), 10, 1, coef.as_mut_ptr(), 3, ptr::null_mut()) },
        DpStatus::BufferTooSmall
    );
    unsafe {
        dp_encoder_free(e);
        dp_dictionary_free(d);
        dp_encoder_free(ptr::null_mut());
        dp_dictionary_free(ptr::null_mut());
    }
}

#[test]
fn threshold_example() {
    let energy = [1.0, 0.04, 0.2];
    let mut bits = [9u8; 3];
    assert_eq!(unsafe { dp_threshold(energy.as_ptr(), 3, 0.05, 1e-4, bits.as_mut_ptr()) }, DpStatus::Ok);
    assert_eq!(bits, [1, 0, 1]);
    assert_eq!(unsafe { dp_threshold(energy.as_ptr(), 3, 0.0, 1e-4, bits.as_mut_ptr()) }, DpStatus::InvalidArgument);
}

#[test]
fn errors_are_per_thread() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { dp_dictionary_generate(4, 0, 1.2, 0.9, true, &mut d) }, DpStatus::InvalidArgument);
    let here = last_error();
    let there = std::thread::spawn(last_error).join().unwrap();
    assert!(!here.is_empty());
    assert!(there.is_empty());
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(dp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dynpose.h")).unwrap();
    for name in [
        "dp_last_error",
        "dp_version",
        "dp_dictionary_default",
        "dp_dictionary_generate",
        "dp_dictionary_parse",
        "dp_dictionary_text",
        "dp_dictionary_hash",
        "dp_dictionary_sizes",
        "dp_dictionary_free",
        "dp_encoder_new",
        "dp_encoder_free",
        "dp_encode_bits",
        "dp_encode_coefficients",
        "dp_threshold",
        "DP_STATUS_BUFFER_TOO_SMALL",
        "typedef struct DpEncoder DpEncoder",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/dynpose.h");
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", header])
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
