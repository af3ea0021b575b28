use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pencil_restore_ffi::*;

fn last_error() -> String {
    let p = pr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(n: usize, m: usize, seed: u64) -> *mut PrSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { pr_system_generate(n, m, seed, &mut sys) }, PrStatus::Ok);
    assert!(!sys.is_null());
    sys
}

#[test]
fn json_round_trip_through_handles() {
    let sys = generate(3, 2, 5);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { pr_system_to_json(sys, &mut text) }, PrStatus::Ok);
    let json = unsafe { CStr::from_ptr(text) }.to_owned();
    unsafe { pr_string_free(text) };

    let mut copy = ptr::null_mut();
    assert_eq!(unsafe { pr_system_from_json(json.as_ptr(), &mut copy) }, PrStatus::Ok);
    let mut text2 = ptr::null_mut();
    assert_eq!(unsafe { pr_system_to_json(copy, &mut text2) }, PrStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(text2) }, json.as_c_str());
    let (mut n, mut m) = (0, 0);
    assert_eq!(unsafe { pr_system_dims(copy, &mut n, &mut m) }, PrStatus::Ok);
    assert_eq!((n, m), (3, 2));
    unsafe {
        pr_string_free(text2);
        pr_system_free(copy);
        pr_system_free(sys);
    }
}

#[test]
fn scalar_stability_radius() {
    let json = CString::new(
        r#"{"format_version":1,"n":1,"m":1,"descriptor":{
            "e":{"rows":1,"cols":1,"data":[[1,0]]},"a":{"rows":1,"cols":1,"data":[[-0.5,0]]},
            "b":{"rows":1,"cols":1,"data":[[1,0]]},"c":{"rows":1,"cols":1,"data":[[1,0]]},
            "d":{"rows":1,"cols":1,"data":[[1,0]]}}}"#,
    )
    .unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { pr_system_from_json(json.as_ptr(), &mut sys) }, PrStatus::Ok);
    let (mut rho, mut omega, mut inf) = (0.0, 0.0, true);
    assert_eq!(
        unsafe { pr_stability_radius(sys, &mut rho, &mut omega, &mut inf) },
        PrStatus::Ok
    );
    assert!((rho - 0.5).abs() < 1e-6);
    assert_eq!((omega, inf), (0.0, false));
    unsafe { pr_system_free(sys) };
}

#[test]
fn restoration_accessors() {
    let sys = generate(4, 2, 9);
    let mut passed = false;
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { pr_check_passivity(sys, &mut passed, &mut report) },
        PrStatus::Ok
    );
    assert!(passed);
    assert!(unsafe { CStr::from_ptr(report) }
        .to_str()
        .unwrap()
        .contains("\"passed\": true"));
    unsafe { pr_string_free(report) };

    let mut res = ptr::null_mut();
    assert_eq!(unsafe { pr_restore(sys, 1e-6, 1, &mut res) }, PrStatus::Ok);
    let mut iterations = 0;
    assert_eq!(unsafe { pr_restoration_iterations(res, &mut iterations) }, PrStatus::Ok);

    let mut len = 0;
    assert_eq!(
        unsafe { pr_restoration_residual_history(res, ptr::null_mut(), 0, &mut len) },
        PrStatus::BufferTooSmall
    );
    assert_eq!(len, iterations + 1);
    let mut hist = vec![0.0; len];
    assert_eq!(
        unsafe { pr_restoration_residual_history(res, hist.as_mut_ptr(), len, &mut len) },
        PrStatus::Ok
    );
    assert!(hist[len - 1] < 1e-14 && hist[0] > hist[len - 1]);

    let (mut y, mut de, mut dph) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { pr_restoration_norms(res, &mut y, &mut de, &mut dph) },
        PrStatus::Ok
    );
    assert!(y > 0.0 && de > 0.0 && dph > 0.0 && de < 1e-4);

    let mut restored = ptr::null_mut();
    assert_eq!(
        unsafe { pr_restoration_restored_system(res, &mut restored) },
        PrStatus::Ok
    );
    let mut ok = false;
    assert_eq!(
        unsafe { pr_check_passivity(restored, &mut ok, ptr::null_mut()) },
        PrStatus::Ok
    );
    assert!(ok);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { pr_restoration_to_json(res, &mut json) }, PrStatus::Ok);
    assert!(unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .contains("residual_history"));
    unsafe {
        pr_string_free(json);
        pr_system_free(restored);
        pr_restoration_free(res);
        pr_system_free(sys);
    }
}

#[test]
fn errors_are_reported() {
    let mut sys = ptr::null_mut();
    assert_eq!(
        unsafe { pr_system_generate(0, 1, 0, &mut sys) },
        PrStatus::InvalidArgument
    );
    assert!(sys.is_null());
    assert!(last_error().contains("at least 1"));

    assert_eq!(
        unsafe { pr_system_generate(2, 1, 0, ptr::null_mut()) },
        PrStatus::NullPointer
    );
    let bad = CString::new("{\"format_version\": 1").unwrap();
    assert_eq!(unsafe { pr_system_from_json(bad.as_ptr(), &mut sys) }, PrStatus::Parse);
    assert!(!last_error().is_empty());

    let sys = generate(3, 1, 2);
    let mut res = ptr::null_mut();
    let status = unsafe { pr_restore(sys, 10.0, 0, &mut res) };
    assert!(
        matches!(status, PrStatus::NonConvergence | PrStatus::Numerical),
        "{status:?}"
    );
    assert!(res.is_null());
    assert_eq!(
        unsafe { pr_restoration_iterations(ptr::null(), &mut 0) },
        PrStatus::NullPointer
    );
    unsafe {
        pr_system_free(sys);
        pr_system_free(ptr::null_mut());
        pr_restoration_free(ptr::null_mut());
        pr_string_free(ptr::null_mut());
    }
}

/// Directory holding the library artifacts of the current build profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/pencil_restore.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pr_system_generate",
        "pr_restore",
        "pr_last_error",
        "PR_STATUS_NON_CONVERGENCE",
        "typedef struct PrSystem PrSystem",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }

    let lib = artifact_dir().join("libpencil_restore_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let compile = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .expect("a C compiler is required");
    assert!(compile.status.success(), "{}", String::from_utf8_lossy(&compile.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("n=4 m=2"));
}
