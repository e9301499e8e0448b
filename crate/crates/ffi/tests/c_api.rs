use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use quantile_motion_ffi::*;

fn new_free() -> *mut QmModel {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { qm_free_gaussian_new(-10.0, 2.0, 0.2, 1.0, &mut m) },
        QmStatus::Ok
    );
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(qm_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

#[test]
fn free_median_moves_with_the_group_velocity() {
    let m = new_free();
    let mut x = f64::NAN;
    assert_eq!(unsafe { qm_quantile_position(m, 0.5, 3.0, &mut x) }, QmStatus::Ok);
    assert!((x + 4.0).abs() < 1e-9, "{x}");
    let mut tail = f64::NAN;
    assert_eq!(unsafe { qm_tail_probability(m, -4.0, 3.0, &mut tail) }, QmStatus::Ok);
    assert!((tail - 0.5).abs() < 1e-12);
    let (mut rho, mut j) = (0.0, 0.0);
    assert_eq!(unsafe { qm_density(m, -4.0, 3.0, &mut rho, &mut j) }, QmStatus::Ok);
    assert!((j / rho - 2.0).abs() < 1e-12);
    let mut v = 0.0;
    assert_eq!(unsafe { qm_quantile_velocity(m, -4.0, 3.0, &mut v) }, QmStatus::Ok);
    assert!((v - 2.0).abs() < 1e-9);
    assert_eq!(unsafe { qm_transmission_probability(m, &mut v) }, QmStatus::Unsupported);
    unsafe { qm_model_free(m) };
}

#[test]
fn trajectories_report_samples_and_termination() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { qm_dissipative_gaussian_new(-10.0, 2.0, 0.2, 1.0, 0.1, &mut m) },
        QmStatus::Ok
    );
    let times: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
    for method in [QmMethod::Cdf, QmMethod::Ode] {
        let mut tr = ptr::null_mut();
        assert_eq!(
            unsafe { qm_trace(m, 0.5, times.as_ptr(), times.len(), method, &mut tr) },
            QmStatus::Ok
        );
        let n = unsafe { qm_trajectory_len(tr) };
        assert!(n > 1 && n < times.len());
        let (mut t, mut x, mut v, mut s) = (0.0, 0.0, 0.0, -1);
        assert_eq!(
            unsafe { qm_trajectory_sample(tr, 0, &mut t, &mut x, &mut v, &mut s) },
            QmStatus::Ok
        );
        assert_eq!((t, s), (0.0, 0));
        assert!((x + 10.0).abs() < 1e-9);
        assert_eq!(
            unsafe { qm_trajectory_sample(tr, n, &mut t, &mut x, &mut v, &mut s) },
            QmStatus::InvalidArgument
        );
        let mut kind = QmTermination::Completed;
        assert_eq!(
            unsafe { qm_trajectory_termination(tr, &mut kind, &mut t) },
            QmStatus::Ok
        );
        assert_eq!(kind, QmTermination::NormBelowP);
        assert!((t - 2f64.ln() / 0.1).abs() < 1e-6, "{t}");
        unsafe { qm_trajectory_free(tr) };
    }
    unsafe { qm_model_free(m) };
}

#[test]
fn tunneling_model_matches_the_transmission_probability() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { qm_tunneling_packet_new(-10.0, 2.0, 0.2, 10.0, 0.3, 256, &mut m) },
        QmStatus::Ok
    );
    let mut pt = 0.0;
    assert_eq!(unsafe { qm_transmission_probability(m, &mut pt) }, QmStatus::Ok);
    assert!((pt - 0.021582).abs() < 5e-6, "{pt}");
    // far past the barrier the tail holds the transmitted probability
    let mut tail = 0.0;
    assert_eq!(unsafe { qm_tail_probability(m, 2.0, 12.0, &mut tail) }, QmStatus::Ok);
    assert!((tail - pt).abs() < 1e-4, "{tail}");
    unsafe { qm_model_free(m) };

    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { qm_free_reference_new(-10.0, 2.0, 0.2, 256, &mut r) },
        QmStatus::Ok
    );
    assert_eq!(unsafe { qm_transmission_probability(r, &mut pt) }, QmStatus::Ok);
    assert!((pt - 1.0).abs() < 1e-6);
    unsafe { qm_model_free(r) };
}

#[test]
fn errors_are_reported_as_codes() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { qm_free_gaussian_new(0.0, 1.0, -1.0, 1.0, &mut m) },
        QmStatus::InvalidArgument
    );
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { qm_free_gaussian_new(0.0, 1.0, 0.2, 1.0, ptr::null_mut()) },
        QmStatus::NullPointer
    );

    let mut x = 0.0;
    assert_eq!(
        unsafe { qm_quantile_position(ptr::null(), 0.5, 0.0, &mut x) },
        QmStatus::NullPointer
    );
    assert!(last_error().contains("model"));

    let m = new_free();
    assert_eq!(
        unsafe { qm_quantile_position(m, 1.5, 0.0, &mut x) },
        QmStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { qm_quantile_position(m, 0.5, 0.0, ptr::null_mut()) },
        QmStatus::NullPointer
    );
    let times = [1.0, 0.5];
    let mut tr = ptr::null_mut();
    assert_eq!(
        unsafe { qm_trace(m, 0.5, times.as_ptr(), 2, QmMethod::Cdf, &mut tr) },
        QmStatus::InvalidArgument
    );
    assert!(tr.is_null());
    unsafe { qm_model_free(m) };

    let mut d = ptr::null_mut();
    assert_eq!(
        unsafe { qm_dissipative_gaussian_new(-10.0, 2.0, 0.2, 1.0, 0.1, &mut d) },
        QmStatus::Ok
    );
    assert_eq!(
        unsafe { qm_quantile_position(d, 0.9, 5.0, &mut x) },
        QmStatus::NormBelowP
    );
    unsafe { qm_model_free(d) };

    let mut k = ptr::null_mut();
    assert_eq!(
        unsafe { qm_tunneling_packet_new(-10.0, 2.0, 0.2, 10.0, 0.3, 64, &mut k) },
        QmStatus::Ok
    );
    assert_eq!(
        unsafe { qm_tail_probability(k, 0.0, 40.0, &mut x) },
        QmStatus::GridTooCoarse
    );
    unsafe { qm_model_free(k) };

    // null handles are ignored by the destructors
    unsafe {
        qm_model_free(ptr::null_mut());
        qm_trajectory_free(ptr::null_mut());
    }
    assert_eq!(unsafe { qm_trajectory_len(ptr::null()) }, 0);
}

#[test]
fn static_strings() {
    let v = unsafe { CStr::from_ptr(qm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let s = unsafe { CStr::from_ptr(qm_status_message(QmStatus::NormBelowP)) };
    assert!(s.to_str().unwrap().contains("norm"));
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "quantile_motion.h"

int main(void) {
    QmModel *m = NULL;
    if (qm_free_gaussian_new(-10.0, 2.0, 0.2, 1.0, &m) != QM_STATUS_OK) return 10;
    double x = 0.0;
    if (qm_quantile_position(m, 0.5, 3.0, &x) != QM_STATUS_OK) return 11;
    if (fabs(x + 4.0) > 1e-9) return 12;
    if (qm_quantile_position(m, 2.0, 3.0, &x) != QM_STATUS_INVALID_ARGUMENT) return 13;
    double times[3] = {0.0, 1.0, 2.0};
    QmTrajectory *tr = NULL;
    if (qm_trace(m, 0.5, times, 3, QM_METHOD_ODE, &tr) != QM_STATUS_OK) return 14;
    if (qm_trajectory_len(tr) != 3) return 15;
    qm_trajectory_free(tr);
    qm_model_free(m);
    printf("%s\n", qm_version());
    return 0;
}
"#;

/// Compiles a C program against the generated header and the static library.
#[test]
fn header_compiles_and_links_from_c() {
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("quantile_motion.h").exists());
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libquantile_motion_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());

    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = tmp.join("qm_smoke.c");
    let exe = tmp.join("qm_smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
