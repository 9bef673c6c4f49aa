use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use event_warp_ffi::*;

const TEXT: &[u8] = b"0,1,1,1\n1000,2,1,0\n2000,3,1,1\n3000,1,2,1\n4000,4,3,0\n";

fn stream(bytes: &[u8]) -> *mut EwStream {
    let mut s = ptr::null_mut();
    let st = unsafe { ew_stream_from_bytes(bytes.as_ptr(), bytes.len(), 8, 6, &mut s) };
    assert_eq!(st, EwStatus::EwOk);
    assert!(!s.is_null());
    s
}

fn pipeline(corrected: bool) -> *mut EwPipeline {
    let mut p = ptr::null_mut();
    let st = unsafe { ew_pipeline_new(corrected, EwKernel::EwNearest, 0.02, 0.0, &mut p) };
    assert_eq!(st, EwStatus::EwOk);
    p
}

fn last_error() -> String {
    let p = ew_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn stream_round_trip_and_geometry() {
    let s = stream(TEXT);
    assert_eq!(unsafe { ew_stream_len(s) }, 5);
    let (mut w, mut h) = (0u16, 0u16);
    assert_eq!(unsafe { ew_stream_geometry(s, &mut w, &mut h) }, EwStatus::EwOk);
    assert_eq!((w, h), (8, 6));
    unsafe { ew_stream_free(s) };
}

#[test]
fn parse_errors_map_to_codes() {
    let mut s = ptr::null_mut();
    let bad = b"0,1,1,1\nnot,an,event,x\n";
    let st = unsafe { ew_stream_from_bytes(bad.as_ptr(), bad.len(), 8, 6, &mut s) };
    assert_eq!(st, EwStatus::EwParse);
    assert!(s.is_null());
    assert!(last_error().contains("line 2"), "{}", last_error());

    let outside = b"0,9,1,1\n";
    let st = unsafe { ew_stream_from_bytes(outside.as_ptr(), outside.len(), 8, 6, &mut s) };
    assert_eq!(st, EwStatus::EwValidation);
}

#[test]
fn null_arguments_are_rejected() {
    assert_eq!(
        unsafe { ew_stream_from_bytes(TEXT.as_ptr(), TEXT.len(), 8, 6, ptr::null_mut()) },
        EwStatus::EwNullPointer
    );
    let mut v = 0.0;
    assert_eq!(
        unsafe { ew_contrast(ptr::null(), ptr::null(), 0.0, 0.0, &mut v) },
        EwStatus::EwNullPointer
    );
    assert_eq!(unsafe { ew_stream_len(ptr::null()) }, 0);
    unsafe {
        ew_stream_free(ptr::null_mut());
        ew_pipeline_free(ptr::null_mut());
    }
}

#[test]
fn contrast_estimate_and_landscape() {
    let s = stream(TEXT);
    let p = pipeline(false);
    let mut v = -1.0;
    assert_eq!(unsafe { ew_contrast(s, p, 0.0, 0.0, &mut v) }, EwStatus::EwOk);
    // five single hits on a 48-pixel sensor
    let mean = 5.0 / 48.0;
    let expected = (5.0 * (1.0 - mean) * (1.0 - mean) + 43.0 * mean * mean) / 48.0;
    assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");

    assert_eq!(unsafe { ew_contrast(s, p, f64::NAN, 0.0, &mut v) }, EwStatus::EwInvalidArgument);

    let mut est = EwEstimate::default();
    assert_eq!(unsafe { ew_estimate(s, p, 0.0, 0.0, 1.0, &mut est) }, EwStatus::EwOk);
    assert!(est.evaluations >= 3 && est.objective > 0.0);

    let (mut nx, mut ny) = (0usize, 0usize);
    let st = unsafe { ew_landscape(s, p, -2.0, 2.0, -1.0, 1.0, 1.0, ptr::null_mut(), 0, &mut nx, &mut ny) };
    assert_eq!(st, EwStatus::EwOk);
    assert_eq!((nx, ny), (5, 3));
    let mut buf = vec![0.0; nx * ny];
    let st = unsafe { ew_landscape(s, p, -2.0, 2.0, -1.0, 1.0, 1.0, buf.as_mut_ptr(), 2, &mut nx, &mut ny) };
    assert_eq!(st, EwStatus::EwInvalidArgument);
    let st = unsafe { ew_landscape(s, p, -2.0, 2.0, -1.0, 1.0, 1.0, buf.as_mut_ptr(), buf.len(), &mut nx, &mut ny) };
    assert_eq!(st, EwStatus::EwOk);
    assert!((buf[nx + 2] - expected).abs() < 1e-12);

    let mut roc = EwRoc::default();
    assert_eq!(unsafe { ew_roc(s, p, 0.0, 0.0, 1.0, 1.0, 1.0, &mut roc) }, EwStatus::EwOk);
    assert_eq!(roc.runs, 9);
    unsafe {
        ew_pipeline_free(p);
        ew_stream_free(s);
    }
}

#[test]
fn pipeline_arguments_validated() {
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { ew_pipeline_new(true, EwKernel::EwBilinear, 1.5, 0.0, &mut p) },
        EwStatus::EwInvalidArgument
    );
    assert_eq!(
        unsafe { ew_pipeline_new(true, EwKernel::EwBilinear, 0.02, 0.5, &mut p) },
        EwStatus::EwInvalidArgument
    );
    assert!(p.is_null());
}

#[test]
fn file_loading() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, TEXT).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ew_stream_from_file(c.as_ptr(), 8, 6, &mut s) }, EwStatus::EwOk);
    assert_eq!(unsafe { ew_stream_len(s) }, 5);
    unsafe { ew_stream_free(s) };
    let missing = CString::new("/nonexistent/events.evt").unwrap();
    assert_eq!(unsafe { ew_stream_from_file(missing.as_ptr(), 8, 6, &mut s) }, EwStatus::EwIo);
}

#[test]
fn analytic_entry_points() {
    assert!((ew_variance_1d(0.5, 1.0) - 1.0 / 9.0).abs() < 1e-15);
    assert!((ew_variance_2d(0.3, 0.0, 2.0) - ew_variance_1d(0.3, 2.0)).abs() < 1e-12);
}

#[test]
fn header_declares_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/event_warp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "ew_last_error",
        "ew_stream_from_bytes",
        "ew_stream_from_file",
        "ew_stream_len",
        "ew_stream_geometry",
        "ew_stream_free",
        "ew_pipeline_new",
        "ew_pipeline_free",
        "ew_contrast",
        "ew_estimate",
        "ew_landscape",
        "ew_roc",
        "ew_variance_1d",
        "ew_variance_2d",
        "typedef struct EwStream EwStream",
        "EW_NULL_POINTER",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"event_warp.h\"\nint main(void) {\n  EwStream *s = 0;\n  EwStatus st = ew_stream_from_bytes(0, 0, 4, 4, &s);\n  ew_stream_free(s);\n  return st == EW_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
}
