use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use attend_ffi::*;

fn task_toml(name: &str) -> CString {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../core/fixtures/tasks/{name}.toml"));
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    attend_string_free(s);
    out
}

#[test]
fn trial_round_trip() {
    unsafe {
        let k = attend_kernel_new();
        let mut t = ptr::null_mut();
        assert_eq!(attend_run_trial(k, task_toml("discrimination").as_ptr(), 1, 0, &mut t), AttendStatus::Ok);
        assert!(attend_trial_success(t));
        assert!(attend_trial_correct(t));
        assert_eq!(CStr::from_ptr(attend_trial_response(t)).to_str().unwrap(), "red_diag");
        let json = take(attend_trial_report_json(t));
        assert!(json.contains("\"task\": \"discrimination\""));
        let trace = take(attend_trial_trace_csv(t));
        assert!(trace.starts_with("signal,kind,t_on,t_off,params\n"));
        assert!(take(attend_trial_fixations_csv(t)).starts_with("index,t,x,y\n"));

        // same inputs, same bytes
        let mut u = ptr::null_mut();
        attend_run_trial(k, task_toml("discrimination").as_ptr(), 1, 0, &mut u);
        assert_eq!(attend_trial_cycles(t), attend_trial_cycles(u));
        assert_eq!(take(attend_trial_trace_csv(u)), trace);

        attend_trial_free(t);
        attend_trial_free(u);
        attend_kernel_free(k);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    unsafe {
        let k = attend_kernel_new();
        let mut t = ptr::null_mut();
        let bad = CString::new("name = 3").unwrap();
        assert_eq!(attend_run_trial(k, bad.as_ptr(), 1, 0, &mut t), AttendStatus::Parse);
        assert!(t.is_null());
        assert!(!CStr::from_ptr(attend_last_error()).to_bytes().is_empty());
        assert_eq!(attend_run_trial(ptr::null(), bad.as_ptr(), 1, 0, &mut t), AttendStatus::NullPointer);
        assert_eq!(attend_run_trial(k, ptr::null(), 1, 0, &mut t), AttendStatus::NullPointer);

        let (mut line, mut col) = (0u32, 0u32);
        let src = CString::new("cp w() {\n  wait(1)\n}").unwrap();
        assert_eq!(attend_check_program(src.as_ptr(), &mut line, &mut col), AttendStatus::Parse);
        assert_eq!((line, col), (3, 1));
        let ok = CString::new("cp w() { wait(1); }").unwrap();
        assert_eq!(attend_check_program(ok.as_ptr(), ptr::null_mut(), ptr::null_mut()), AttendStatus::Ok);

        let invalid = [0xffu8, 0];
        assert_eq!(
            attend_check_program(invalid.as_ptr() as *const _, ptr::null_mut(), ptr::null_mut()),
            AttendStatus::InvalidUtf8
        );

        // null handles are tolerated by the accessors
        assert!(!attend_trial_success(ptr::null()));
        assert!(attend_trial_response(ptr::null()).is_null());
        attend_trial_free(ptr::null_mut());
        attend_kernel_free(k);
    }
}

#[test]
fn added_programs_are_selectable() {
    unsafe {
        let k = attend_kernel_new();
        let p = CString::new("cp always_other(other) { feedforward(); emit(other); }").unwrap();
        assert_eq!(attend_kernel_add_program(k, p.as_ptr()), AttendStatus::Ok);
        // top-level keys must precede the task's tables
        let toml = "cp = \"always_other\"\n".to_string() + &task_toml("discrimination").into_string().unwrap();
        let toml = CString::new(toml).unwrap();
        let mut t = ptr::null_mut();
        assert_eq!(attend_run_trial(k, toml.as_ptr(), 1, 0, &mut t), AttendStatus::Ok);
        assert_eq!(CStr::from_ptr(attend_trial_response(t)).to_str().unwrap(), "green_diag");
        assert!(!attend_trial_correct(t));
        attend_trial_free(t);

        let missing = "cp = \"nope\"\n".to_string() + &task_toml("discrimination").into_string().unwrap();
        let missing = CString::new(missing).unwrap();
        assert_eq!(attend_run_trial(k, missing.as_ptr(), 1, 0, &mut t), AttendStatus::Runtime);
        attend_kernel_free(k);
    }
}

#[test]
fn oracle_and_version() {
    unsafe {
        let all = take(attend_oracle_csv(ptr::null()));
        assert!(all.lines().count() > 10);
        let f = CString::new("2^1000").unwrap();
        let one = take(attend_oracle_csv(f.as_ptr()));
        assert_eq!(one.lines().count(), 2);
        assert_eq!(CStr::from_ptr(attend_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/attend.h")).unwrap();
    for f in [
        "attend_last_error",
        "attend_version",
        "attend_string_free",
        "attend_kernel_new",
        "attend_kernel_free",
        "attend_check_program",
        "attend_kernel_add_program",
        "attend_run_trial",
        "attend_trial_free",
        "attend_trial_success",
        "attend_trial_correct",
        "attend_trial_cycles",
        "attend_trial_response",
        "attend_trial_report_json",
        "attend_trial_trace_csv",
        "attend_trial_fixations_csv",
        "attend_oracle_csv",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f}");
    }
    assert!(header.contains("typedef struct AttendKernel AttendKernel;"));
    assert!(header.contains("ATTEND_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile_dir();
    let main = dir.join("main.c");
    std::fs::write(
        &main,
        "#include \"attend.h\"\nint main(void) { AttendStatus s = ATTEND_STATUS_OK; return (int)s; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&main)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "clang", "gcc"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("abi");
    std::fs::create_dir_all(&d).unwrap();
    d
}
