use std::ffi::{c_char, c_int, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pascal_boundary_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { pb_string_free(s) };
    out
}

fn last_error() -> String {
    take(pb_last_error_message())
}

#[test]
fn graph_dimensions() {
    let spec = CString::new("stirling1").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pb_graph_new(spec.as_ptr(), &mut g) }, PbStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pb_graph_dimension(g, 1, 2, &mut s) }, PbStatus::Ok);
    assert_eq!(take(s), "11");
    let mut x = 0.0;
    assert_eq!(unsafe { pb_graph_dimension_f64(g, 0, 4, &mut x) }, PbStatus::Ok);
    assert_eq!(x, 24.0);
    unsafe { pb_graph_free(g) };
}

#[test]
fn phi_handles() {
    let spec = CString::new("crp;alpha=-1;theta=3").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pb_phi_new(spec.as_ptr(), 6, &mut p) }, PbStatus::Ok);
    assert_eq!(unsafe { pb_phi_horizon(p) }, 6);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { pb_phi_value(p, 0, 0, &mut s) }, PbStatus::Ok);
    assert_eq!(take(s), "1");
    assert_eq!(unsafe { pb_phi_value(p, 7, 0, &mut s) }, PbStatus::OutOfRange);
    unsafe { pb_phi_free(p) };
    assert_eq!(unsafe { pb_phi_horizon(ptr::null()) }, 0);
}

#[test]
fn errors_and_null_arguments() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { pb_graph_new(ptr::null(), &mut g) }, PbStatus::NullArgument);
    let bad = CString::new("crp;alpha=-1;theta=3/2").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pb_phi_new(bad.as_ptr(), 4, &mut p) }, PbStatus::InvalidParameter);
    assert!(p.is_null());
    assert!(last_error().contains("positive integer"));
    let spec = CString::new("pascal").unwrap();
    assert_eq!(unsafe { pb_graph_new(spec.as_ptr(), ptr::null_mut()) }, PbStatus::NullArgument);
    let invalid = [0xffu8, 0];
    assert_eq!(
        unsafe { pb_graph_new(invalid.as_ptr().cast(), &mut g) },
        PbStatus::InvalidUtf8
    );
    unsafe { pb_string_free(ptr::null_mut()) };
}

#[test]
fn json_entry_points() {
    let spec = CString::new("stirling2").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pb_boundary_report_json(spec.as_ptr(), 5, &mut out) }, PbStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(report["classification"], "discrete");

    let job = CString::new(
        r#"{"process":"polya","params":{"a":"1","b":"1"},"n":6,"replicates":200,"seed":3}"#,
    )
    .unwrap();
    assert_eq!(unsafe { pb_simulate_json(job.as_ptr(), &mut out) }, PbStatus::Ok);
    let first = take(out);
    assert_eq!(unsafe { pb_simulate_json(job.as_ptr(), &mut out) }, PbStatus::Ok);
    assert_eq!(first, take(out));
    let bad = CString::new("{").unwrap();
    assert_eq!(unsafe { pb_simulate_json(bad.as_ptr(), &mut out) }, PbStatus::Parse);

    let mut ok: c_int = 0;
    assert_eq!(unsafe { pb_self_check(&mut ok) }, PbStatus::Ok);
    assert_eq!(ok, 1);
    assert!(!unsafe { CStr::from_ptr(pb_version()) }.to_bytes().is_empty());
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/pascal_boundary.h")).unwrap();
    for name in [
        "pb_graph_new",
        "pb_graph_free",
        "pb_phi_new",
        "pb_boundary_report_json",
        "pb_simulate_json",
        "pb_last_error_message",
        "pb_string_free",
        "typedef struct PbGraph PbGraph",
        "PB_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libpascal_boundary_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let lib = static_lib().expect("static library next to the test binary");
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("d(1,1)=3/2"));
}

fn tempfile_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi-smoke");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
