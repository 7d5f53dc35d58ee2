use kpz_tails_ffi::*;
use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(kpz_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn closed_forms_match_the_library() {
    let mut v = 0.0;
    assert_eq!(unsafe { kpz_one_point_log_rate(4.0, &mut v) }, KpzStatus::KpzOk);
    assert!((v - 4.0 / 3.0 * 8.0).abs() < 1e-12);
    assert_eq!(unsafe { kpz_two_point_log_rate(1.0, 0.0, 0.0, &mut v) }, KpzStatus::KpzOk);
    assert!(v.is_finite() && v > 0.0);
    let mut case = KpzCase::KpzTwoExtreme;
    assert_eq!(unsafe { kpz_classify(1.0, 0.5, -0.9, &mut case) }, KpzStatus::KpzOk);
    assert_eq!(case, KpzCase::KpzInfinitelyMany);
    let (mut l, mut r) = (0.0, 0.0);
    assert_eq!(unsafe { kpz_tangency_points(1.0, 0.0, 0.0, &mut l, &mut r) }, KpzStatus::KpzOk);
    assert!((l + 2.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
}

#[test]
fn domain_errors_and_nulls_map_to_codes() {
    let mut v = 0.0;
    assert_eq!(unsafe { kpz_one_point_log_rate(-1.0, &mut v) }, KpzStatus::KpzDomain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { kpz_one_point_log_rate(1.0, ptr::null_mut()) }, KpzStatus::KpzNullPointer);
    assert_eq!(unsafe { kpz_avoidance_upper_bound(0.0, &mut v) }, KpzStatus::KpzDomain);
}

#[test]
fn avoidance_estimate_sits_between_bounds() {
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut flagged = true;
    assert_eq!(unsafe { kpz_avoidance_lower_bound(-3.0, 3.0, 0.0, &mut lo, &mut flagged) }, KpzStatus::KpzOk);
    assert!(!flagged);
    assert_eq!(unsafe { kpz_avoidance_upper_bound(3.0, &mut hi) }, KpzStatus::KpzOk);
    let mut a = KpzEstimate::default();
    let mut b = KpzEstimate::default();
    assert_eq!(unsafe { kpz_mc_avoidance(3.0, 0.02, 20_000, 5, true, &mut a) }, KpzStatus::KpzOk);
    assert_eq!(unsafe { kpz_mc_avoidance(3.0, 0.02, 20_000, 5, true, &mut b) }, KpzStatus::KpzOk);
    assert_eq!(a, b);
    assert!(lo <= a.log_p && a.log_p <= hi, "{lo} {} {hi}", a.log_p);
}

#[test]
fn chain_handle_lifecycle() {
    let ends = [0.0, -1.0];
    let mut chain = ptr::null_mut();
    let status = unsafe { kpz_chain_new(2, ends.as_ptr(), ends.as_ptr(), 0.0, 1.0, 0.05, 0.0, 50.0, 3, &mut chain) };
    assert_eq!(status, KpzStatus::KpzOk, "{}", last_error());
    assert_eq!(unsafe { kpz_chain_run(chain, 200) }, KpzStatus::KpzOk);
    let mut len = 0;
    assert_eq!(unsafe { kpz_chain_grid_len(chain, &mut len) }, KpzStatus::KpzOk);
    assert_eq!(len, 21);
    let (mut top, mut bottom) = (vec![0.0; len], vec![0.0; len]);
    assert_eq!(unsafe { kpz_chain_curve(chain, 0, top.as_mut_ptr(), len) }, KpzStatus::KpzOk);
    assert_eq!(unsafe { kpz_chain_curve(chain, 1, bottom.as_mut_ptr(), len) }, KpzStatus::KpzOk);
    assert!(top.iter().zip(&bottom).all(|(a, b)| a > b));
    assert_eq!(unsafe { kpz_chain_curve(chain, 2, top.as_mut_ptr(), len) }, KpzStatus::KpzDomain);
    assert_eq!(unsafe { kpz_chain_curve(chain, 0, top.as_mut_ptr(), len - 1) }, KpzStatus::KpzDomain);
    let mut rate = 0.0;
    assert_eq!(unsafe { kpz_chain_acceptance_rate(chain, &mut rate) }, KpzStatus::KpzOk);
    assert!(rate > 0.0 && rate <= 1.0);
    unsafe { kpz_chain_free(chain) };
    unsafe { kpz_chain_free(ptr::null_mut()) };
}

#[test]
fn chain_rejects_unordered_ends() {
    let ends = [0.0, 1.0];
    let mut chain = ptr::null_mut();
    let status = unsafe { kpz_chain_new(2, ends.as_ptr(), ends.as_ptr(), 0.0, 1.0, 0.05, 0.0, 50.0, 3, &mut chain) };
    assert_ne!(status, KpzStatus::KpzOk);
    assert!(chain.is_null());
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kpz_tails.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["kpz_last_error", "kpz_mc_avoidance", "kpz_chain_new", "kpz_chain_free", "KPZ_DOMAIN"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, format!("#include \"{}\"\nint main(void) {{ return KPZ_OK; }}\n", header.display())).unwrap();
    match Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() {
        Ok(status) => assert!(status.success()),
        Err(_) => eprintln!("no C compiler; skipped syntax check"),
    }
}
