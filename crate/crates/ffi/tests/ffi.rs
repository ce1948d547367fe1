use std::ffi::{CStr, CString};
use std::ptr;

use coopruin_ffi::*;

fn last_error() -> String {
    let p = coopruin_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn graph(spec: &str) -> *mut CoopruinGraph {
    let s = CString::new(spec).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { coopruin_graph_from_spec(s.as_ptr(), &mut g) }, CoopruinStatus::Ok);
    g
}

fn rates(v: &[f64]) -> *mut CoopruinRates {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { coopruin_rates_new(v.as_ptr(), v.len(), &mut r) }, CoopruinStatus::Ok);
    r
}

#[test]
fn graph_handles() {
    let g = graph("cycle:4");
    assert_eq!(unsafe { coopruin_graph_vertex_count(g) }, 4);
    let mut dee = 0;
    assert_eq!(unsafe { coopruin_graph_distance_sum_max(g, &mut dee) }, CoopruinStatus::Ok);
    assert_eq!(dee, 4);
    assert!(coopruin_last_error_message().is_null());
    unsafe { coopruin_graph_free(g) };

    let edges = [0usize, 1, 1, 2];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { coopruin_graph_from_edges(3, edges.as_ptr(), 2, &mut p) }, CoopruinStatus::Ok);
    let mut dee = 0;
    unsafe { coopruin_graph_distance_sum_max(p, &mut dee) };
    assert_eq!(dee, 3);
    unsafe { coopruin_graph_free(p) };
    unsafe { coopruin_graph_free(ptr::null_mut()) };
}

#[test]
fn errors_carry_messages() {
    let bad = CString::new("moebius:3").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { coopruin_graph_from_spec(bad.as_ptr(), &mut g) }, CoopruinStatus::Parse);
    assert!(g.is_null());
    assert!(last_error().contains("moebius"));

    assert_eq!(
        unsafe { coopruin_graph_from_spec(ptr::null(), &mut g) },
        CoopruinStatus::NullPointer
    );
    assert!(last_error().contains("spec"));

    let mut out = [0.0; 4];
    assert_eq!(
        unsafe { coopruin_two_person_exit_probs(1.2, 1.3, 1, out.as_mut_ptr()) },
        CoopruinStatus::OutsideRegion
    );
    assert!(last_error().contains("region"));

    let mut r = ptr::null_mut();
    let neg = [1.0, -2.0];
    assert_eq!(unsafe { coopruin_rates_new(neg.as_ptr(), 2, &mut r) }, CoopruinStatus::InvalidArgument);

    // A success clears the message.
    let mut p = 0.0;
    assert_eq!(unsafe { coopruin_ruin_two_sided(2.0, 2, 0, 4, &mut p) }, CoopruinStatus::Ok);
    assert!(coopruin_last_error_message().is_null());
}

#[test]
fn analytic_values() {
    let mut p = 0.0;
    unsafe { coopruin_ruin_two_sided(2.0, 2, 0, 4, &mut p) };
    // (1 - 2^-2) / (1 - 2^-4).
    assert!((p - 0.8).abs() < 1e-15);
    unsafe { coopruin_ruin_two_sided(1.0, 3, 0, 10, &mut p) };
    assert!((p - 0.3).abs() < 1e-12);

    let g = graph("cycle:4");
    let r = rates(&[2.0; 4]);
    let mut bound = 0.0;
    unsafe { coopruin_survival_bound_infinite_mu(g, r, 3, &mut bound) };
    assert!((bound - (1.0 - 2f64.powi(-9))).abs() < 1e-15);
    let mut p0 = 0.0;
    unsafe { coopruin_survival_no_cooperation(r, 3, &mut p0) };
    assert!((p0 - (1.0 - 2f64.powi(-4)).powi(4)).abs() < 1e-15);

    let mut phi_bar = 0.0;
    unsafe { coopruin_rates_phi_bar(r, &mut phi_bar) };
    assert_eq!(phi_bar, 2.0);
    let mut buf = [0.0; 2];
    assert_eq!(unsafe { coopruin_rates_copy(r, buf.as_mut_ptr(), 2) }, 4);
    assert_eq!(buf, [2.0, 2.0]);
    unsafe {
        coopruin_rates_free(r);
        coopruin_graph_free(g);
    }
}

#[test]
fn two_person_laws() {
    let (px, py) = (0.5, 1.25);
    let mut closed = [0.0; 4];
    let mut exact = [0.0; 4];
    unsafe {
        coopruin_two_person_exit_probs(px, py, 1, closed.as_mut_ptr());
        coopruin_two_person_exact_exit_probs(px, py, 1, exact.as_mut_ptr());
    }
    let psi = 8.0 + 2.0 * px + 2.0 * py;
    assert!((closed[0] - 2.0 / psi).abs() < 1e-12);
    assert!((closed.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // Next to (0,0) both laws agree.
    assert!((exact[0] - closed[0]).abs() < 1e-12);

    let mut e_inf = 0.0;
    let mut e0 = 0.0;
    unsafe {
        coopruin_two_person_expected_survivors(px, py, 1, f64::INFINITY, true, &mut e_inf);
        coopruin_two_person_expected_survivors(px, py, 1, 0.0, false, &mut e0);
    }
    assert!((e0 - (1.0 - 1.25f64.powi(-2))).abs() < 1e-12);
    assert!(e_inf < e0);
    assert_eq!(
        unsafe { coopruin_two_person_expected_survivors(px, py, 1, 2.0, false, &mut e0) },
        CoopruinStatus::InvalidArgument
    );
}

#[test]
fn survival_estimate_matches_single_agent_ruin() {
    let g = graph("complete:1");
    let r = rates(&[2.0]);
    let mut est = CoopruinEstimate::default();
    let status = unsafe { coopruin_estimate_survival(g, r, 0.0, 2, f64::INFINITY, 20_000, 7, &mut est) };
    assert_eq!(status, CoopruinStatus::Ok);
    assert_eq!(est.n_replicas, 20_000);
    assert_eq!(est.n_censored, 0);
    // Oracle 1 - 2^-3 within 3 standard errors.
    assert!((est.point - 0.875).abs() <= 3.0 * est.std_error, "{est:?}");

    let mut again = CoopruinEstimate::default();
    unsafe { coopruin_estimate_survival(g, r, 0.0, 2, f64::INFINITY, 20_000, 7, &mut again) };
    assert_eq!(est, again);

    assert_eq!(
        unsafe { coopruin_estimate_survival(g, ptr::null(), 0.0, 2, 1.0, 10, 7, &mut again) },
        CoopruinStatus::NullPointer
    );
    let wrong = rates(&[2.0, 2.0]);
    assert_eq!(
        unsafe { coopruin_estimate_survival(g, wrong, 0.0, 2, 1.0, 10, 7, &mut again) },
        CoopruinStatus::InvalidArgument
    );
    unsafe {
        coopruin_rates_free(wrong);
        coopruin_rates_free(r);
        coopruin_graph_free(g);
    }
}

#[test]
fn sampled_rates_are_reproducible() {
    let spec = CString::new("uniform:0.4,1.2").unwrap();
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        coopruin_rates_sample(spec.as_ptr(), 50, 3, &mut a);
        coopruin_rates_sample(spec.as_ptr(), 50, 3, &mut b);
    }
    let (mut va, mut vb) = ([0.0; 50], [0.0; 50]);
    unsafe {
        coopruin_rates_copy(a, va.as_mut_ptr(), 50);
        coopruin_rates_copy(b, vb.as_mut_ptr(), 50);
        coopruin_rates_free(a);
        coopruin_rates_free(b);
    }
    assert_eq!(va, vb);
    assert!(va.iter().all(|&x| (0.4..1.2).contains(&x)));
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/coopruin.h")).unwrap();
    for name in [
        "typedef struct CoopruinGraph CoopruinGraph;",
        "COOPRUIN_STATUS_OUTSIDE_REGION = 3",
        "coopruin_last_error_message(void)",
        "coopruin_estimate_survival(",
        "coopruin_two_person_exact_exit_probs(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    let v = unsafe { CStr::from_ptr(coopruin_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static
/// library, when a C compiler is on the path.
#[test]
fn c_program_links_against_header() {
    let Ok(exe) = std::env::current_exe() else { return };
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libcoopruin_ffi.a");
    if !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "coopruin.h"
int main(void) {
    double p = 0.0;
    if (coopruin_ruin_two_sided(2.0, 2, 0, 4, &p) != COOPRUIN_STATUS_OK) return 1;
    if (fabs(p - 0.8) > 1e-12) return 2;
    CoopruinGraph *g = NULL;
    if (coopruin_graph_from_spec("nope", &g) != COOPRUIN_STATUS_PARSE) return 3;
    if (coopruin_last_error_message() == NULL) return 4;
    if (coopruin_graph_from_spec("cycle:4", &g) != COOPRUIN_STATUS_OK) return 5;
    unsigned long long dee = 0;
    coopruin_graph_distance_sum_max(g, (uint64_t *)&dee);
    coopruin_graph_free(g);
    printf("%llu\n", dee);
    return dee == 4 ? 0 : 6;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4");
}
