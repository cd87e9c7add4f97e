use std::ffi::{CStr, CString};
use std::ptr;

use neusis_sim_ffi::*;

fn tutorial() -> CString {
    CString::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/tutorial.scenario"
    ))
    .unwrap()
}

fn last_error() -> String {
    let p = ns_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn tutorial_mission_through_the_c_abi() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ns_scenario_load(tutorial().as_ptr(), &mut s), NsStatus::Ok);
        assert_eq!(ns_scenario_aoi_count(s), 3);
        assert_eq!(ns_scenario_eoi_count(s), 4);

        let json =
            CString::new(r#"{"sensor_preset":"perfect","selection":"optimal","coverage":"snac"}"#)
                .unwrap();
        let mut c = ptr::null_mut();
        assert_eq!(ns_config_from_json(json.as_ptr(), &mut c), NsStatus::Ok);

        let mut t = ptr::null_mut();
        assert_eq!(ns_run_mission(s, c, ptr::null(), &mut t), NsStatus::Ok);
        assert_eq!(ns_trace_end_reason(t), NsEndReason::EoisFound);
        assert_eq!(ns_trace_found_count(t), 4);
        assert!(ns_trace_frame_count(t) > 0);

        let mut text = ptr::null_mut();
        assert_eq!(ns_trace_to_jsonl(t, &mut text), NsStatus::Ok);
        let lines = CStr::from_ptr(text).to_str().unwrap().lines().count();
        assert!(lines > ns_trace_frame_count(t));
        ns_string_free(text);

        let dir = tempfile::tempdir().unwrap();
        let out = CString::new(dir.path().join("t.jsonl").to_str().unwrap()).unwrap();
        assert_eq!(ns_trace_write(t, out.as_ptr()), NsStatus::Ok);
        assert!(dir.path().join("t.jsonl").exists());

        ns_trace_free(t);
        ns_config_free(c);
        ns_scenario_free(s);
    }
}

#[test]
fn same_handles_give_identical_traces() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ns_scenario_generate(5, &mut s), NsStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(ns_config_from_json(ptr::null(), &mut c), NsStatus::Ok);
        let mut texts = Vec::new();
        for _ in 0..2 {
            let mut t = ptr::null_mut();
            assert_eq!(ns_run_mission(s, c, ptr::null(), &mut t), NsStatus::Ok);
            let mut text = ptr::null_mut();
            assert_eq!(ns_trace_to_jsonl(t, &mut text), NsStatus::Ok);
            texts.push(CStr::from_ptr(text).to_owned());
            ns_string_free(text);
            ns_trace_free(t);
        }
        assert_eq!(texts[0], texts[1]);
        ns_config_free(c);
        ns_scenario_free(s);
    }
}

#[test]
fn errors_come_back_as_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ns_scenario_load(ptr::null(), &mut s), NsStatus::NullPointer);
        assert!(s.is_null());
        assert!(last_error().contains("path"));

        let missing = CString::new("/nonexistent/x.scenario").unwrap();
        assert_eq!(ns_scenario_load(missing.as_ptr(), &mut s), NsStatus::Io);

        let bad = [0xffu8, 0];
        assert_eq!(
            ns_scenario_load(bad.as_ptr().cast(), &mut s),
            NsStatus::InvalidUtf8
        );

        let mut c = ptr::null_mut();
        let json = CString::new("{not json").unwrap();
        assert_eq!(ns_config_from_json(json.as_ptr(), &mut c), NsStatus::Config);
        let json = CString::new(r#"{"time_quantum": -1}"#).unwrap();
        assert_eq!(ns_config_from_json(json.as_ptr(), &mut c), NsStatus::Config);
        assert!(c.is_null());

        let mut t = ptr::null_mut();
        assert_eq!(
            ns_run_mission(ptr::null(), ptr::null(), ptr::null(), &mut t),
            NsStatus::NullPointer
        );
        assert_eq!(
            ns_run_mission(ptr::null(), ptr::null(), ptr::null(), ptr::null_mut()),
            NsStatus::NullPointer
        );

        // Accessors and destructors tolerate null.
        assert_eq!(ns_trace_end_reason(ptr::null()), NsEndReason::Unknown);
        assert_eq!(ns_trace_frame_count(ptr::null()), 0);
        ns_trace_free(ptr::null_mut());
        ns_scenario_free(ptr::null_mut());
        ns_config_free(ptr::null_mut());
        ns_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ns_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/neusis_sim.h"))
        .unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
}
