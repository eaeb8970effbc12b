use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use bestpath_ffi::*;

fn data(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = bpa_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    bpa_string_free(p);
    s
}

unsafe fn prostate() -> *mut BpaTable {
    let mut table = ptr::null_mut();
    let status = bpa_table_load(data("prostate.csv").as_ptr(), data("prostate.schema.json").as_ptr(), &mut table);
    assert_eq!(status, BpaStatus::Ok);
    table
}

#[test]
fn prostate_round_trip() {
    unsafe {
        let table = prostate();
        let (mut rows, mut vars) = (0, 0);
        assert_eq!(bpa_table_shape(table, &mut rows, &mut vars), BpaStatus::Ok);
        assert_eq!((rows, vars), (97, 9));

        let mut forest = ptr::null_mut();
        assert_eq!(bpa_forest_build(table, 1, 0, &mut forest), BpaStatus::Ok);
        let mut edges = 0;
        assert_eq!(bpa_forest_n_edges(forest, &mut edges), BpaStatus::Ok);
        assert_eq!(edges, 8);
        let mut json = ptr::null_mut();
        assert_eq!(bpa_forest_to_json(forest, &mut json), BpaStatus::Ok);
        assert!(take_string(json).contains("\"svi\""));
        let mut dot = ptr::null_mut();
        assert_eq!(bpa_forest_to_dot(forest, &mut dot), BpaStatus::Ok);
        assert!(take_string(dot).starts_with("graph"));
        bpa_forest_free(forest);

        let mut opts = bpa_select_options_default();
        opts.method = 1;
        let target = CString::new("lpsa").unwrap();
        let mut report = ptr::null_mut();
        assert_eq!(bpa_select(table, target.as_ptr(), &opts, &mut report), BpaStatus::Ok);
        let mut k = 0;
        assert_eq!(bpa_report_best_k(report, &mut k), BpaStatus::Ok);
        assert_eq!(k, 3);
        let mut n = 0;
        assert_eq!(bpa_report_n_selected(report, &mut n), BpaStatus::Ok);
        let names: Vec<String> = (0..n)
            .map(|i| {
                let mut s = ptr::null_mut();
                assert_eq!(bpa_report_selected_name(report, i, &mut s), BpaStatus::Ok);
                take_string(s)
            })
            .collect();
        assert_eq!(names, ["lcavol", "lweight", "svi"]);
        let mut s = ptr::null_mut();
        assert_eq!(bpa_report_selected_name(report, n, &mut s), BpaStatus::OutOfRange);
        let mut json = ptr::null_mut();
        assert_eq!(bpa_report_to_json(report, &mut json), BpaStatus::Ok);
        assert!(take_string(json).contains("\"best_k\": 3"));
        bpa_report_free(report);
        bpa_table_free(table);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut table = ptr::null_mut();
        let missing = CString::new("/nonexistent/file.csv").unwrap();
        assert_eq!(bpa_table_load(missing.as_ptr(), ptr::null(), &mut table), BpaStatus::Io);
        assert!(last_error().contains("nonexistent"));
        assert!(table.is_null());
        assert_eq!(bpa_table_load(ptr::null(), ptr::null(), &mut table), BpaStatus::NullPointer);

        let table = prostate();
        let bad = CString::new("nope").unwrap();
        let mut report = ptr::null_mut();
        assert_eq!(bpa_select(table, bad.as_ptr(), ptr::null(), &mut report), BpaStatus::UnknownVariable);
        assert!(last_error().contains("nope"));
        let mut forest = ptr::null_mut();
        assert_eq!(bpa_forest_build(table, 7, 0, &mut forest), BpaStatus::InvalidArgument);
        let mut k = 0;
        assert_eq!(bpa_report_best_k(ptr::null(), &mut k), BpaStatus::NullPointer);
        bpa_table_free(table);
        bpa_table_free(ptr::null_mut());
        bpa_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/bestpath.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "BPA_STATUS_OK",
        "typedef struct BpaTable BpaTable",
        "bpa_table_load",
        "bpa_select",
        "bpa_report_to_json",
        "bpa_string_free",
        "bpa_last_error_message",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    // the header must parse as C when a compiler is available
    if let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(&header)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
