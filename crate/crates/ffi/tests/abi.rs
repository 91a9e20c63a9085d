#![allow(clippy::excessive_precision)]

use std::ffi::{CStr, CString};
use std::ptr;

use divgeom_ffi::*;

struct Spec(*mut DgSpec);

impl Spec {
    fn new(family: &str, generator: Option<&str>, order: f64) -> Self {
        let family = CString::new(family).unwrap();
        let generator = generator.map(|g| CString::new(g).unwrap());
        let mut out = ptr::null_mut();
        let status = unsafe {
            dg_spec_new(family.as_ptr(), generator.as_ref().map_or(ptr::null(), |g| g.as_ptr()), order, &mut out)
        };
        assert_eq!(status, DgStatus::Ok, "{}", last_error());
        Spec(out)
    }
}

impl Drop for Spec {
    fn drop(&mut self) {
        unsafe { dg_spec_free(self.0) }
    }
}

struct Report(*mut DgReport);

impl Drop for Report {
    fn drop(&mut self) {
        unsafe { dg_report_free(self.0) }
    }
}

impl Report {
    fn solution(&self) -> Vec<f64> {
        let n = unsafe { dg_report_support_size(self.0) };
        let mut out = vec![0.0; n];
        assert_eq!(unsafe { dg_report_solution(self.0, out.as_mut_ptr(), n) }, DgStatus::Ok);
        out
    }
}

fn last_error() -> String {
    let p = dg_last_error();
    if p.is_null() {
        return String::new();
    }
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn eval_matches_closed_form() {
    let kl = Spec::new("kl", None, f64::NAN);
    let (p, q) = ([0.5, 0.5], [0.25, 0.75]);
    let mut value = 0.0;
    let status = unsafe { dg_eval(kl.0, p.as_ptr(), q.as_ptr(), 2, ptr::null(), &mut value) };
    assert_eq!(status, DgStatus::Ok);
    assert!((value - 0.5 * (4.0f64 / 3.0).ln()).abs() <= 1e-15);
    assert!(dg_last_error().is_null());
}

#[test]
fn gradients_match_closed_forms() {
    let euclidean = Spec::new("euclidean", None, f64::NAN);
    let (p, q) = ([0.5, 0.5], [0.3, 0.7]);
    let mut g = [0.0; 2];
    assert_eq!(
        unsafe { dg_grad_second(euclidean.0, p.as_ptr(), q.as_ptr(), 2, ptr::null(), g.as_mut_ptr()) },
        DgStatus::Ok
    );
    assert!((g[0] + 0.2).abs() <= 1e-15 && (g[1] - 0.2).abs() <= 1e-15);

    let square = Spec::new("bregman", Some("square"), f64::NAN);
    let (p, q) = ([0.3, 0.7], [0.5, 0.5]);
    assert_eq!(
        unsafe { dg_grad_first(square.0, p.as_ptr(), q.as_ptr(), 2, ptr::null(), g.as_mut_ptr()) },
        DgStatus::Ok
    );
    assert!((g[0] + 0.4).abs() <= 1e-15 && (g[1] - 0.4).abs() <= 1e-15);

    let renyi = Spec::new("renyi", None, 2.0);
    let p = [0.5, 0.5];
    assert_eq!(
        unsafe { dg_grad_second(renyi.0, p.as_ptr(), p.as_ptr(), 2, ptr::null(), g.as_mut_ptr()) },
        DgStatus::Ok
    );
    assert_eq!(g, [-1.0, -1.0]);
    assert_eq!(
        unsafe { dg_grad_first(renyi.0, p.as_ptr(), p.as_ptr(), 2, ptr::null(), g.as_mut_ptr()) },
        DgStatus::Unavailable
    );
}

#[test]
fn three_point_identity_through_the_abi() {
    let kl = Spec::new("kl", None, f64::NAN);
    let (p, q, r) = ([0.2, 0.3, 0.5], [0.4, 0.4, 0.2], [0.1, 0.6, 0.3]);
    let d = |a: &[f64; 3], b: &[f64; 3]| {
        let mut v = 0.0;
        assert_eq!(unsafe { dg_eval(kl.0, a.as_ptr(), b.as_ptr(), 3, ptr::null(), &mut v) }, DgStatus::Ok);
        v
    };
    let mut ip = 0.0;
    assert_eq!(
        unsafe { dg_inner_product(kl.0, p.as_ptr(), q.as_ptr(), r.as_ptr(), 3, ptr::null(), &mut ip) },
        DgStatus::Ok
    );
    // For KL the slack is Σ p ln(q/r) + Σ r p/q - 1, positive for Q ≠ R.
    let closed: f64 = (0..3).map(|z| p[z] * (q[z] / r[z]).ln() + r[z] * p[z] / q[z]).sum::<f64>() - 1.0;
    let slack = d(&p, &r) - d(&p, &q) + ip;
    assert!((slack - closed).abs() <= 1e-15 && slack > 0.0, "{slack} vs {closed}");
}

#[test]
fn reverse_kl_line_is_the_normalized_geometric_mean() {
    let rkl = Spec::new("reverse_kl", None, f64::NAN);
    let (p, q) = ([0.5, 0.5], [0.25, 0.75]);
    let (mut mass, mut multiplier, mut residual) = ([0.0; 2], 0.0, 1.0);
    let status = unsafe {
        dg_line_point(
            rkl.0,
            p.as_ptr(),
            q.as_ptr(),
            2,
            0.5,
            ptr::null(),
            mass.as_mut_ptr(),
            &mut multiplier,
            &mut residual,
        )
    };
    assert_eq!(status, DgStatus::Ok);
    let r0 = (3.0f64.sqrt() - 1.0) / 2.0;
    assert!((mass[0] - r0).abs() <= 1e-15 && (mass[1] - (1.0 - r0)).abs() <= 1e-15);
    assert!(residual <= 1e-10);
}

#[test]
fn kl_centroid_is_the_mixture() {
    let kl = Spec::new("kl", None, f64::NAN);
    let points = [0.2, 0.3, 0.5, 0.6, 0.1, 0.3];
    let weights = [0.25, 0.75];
    let mut out = ptr::null_mut();
    let status = unsafe { dg_centroid(kl.0, points.as_ptr(), 2, 3, weights.as_ptr(), ptr::null(), &mut out) };
    assert_eq!(status, DgStatus::Ok, "{}", last_error());
    let report = Report(out);
    for (got, want) in report.solution().iter().zip([0.5, 0.15, 0.35]) {
        assert!((got - want).abs() <= 1e-10);
    }
    assert!(unsafe { dg_report_converged(report.0) });

    let mut uniform = ptr::null_mut();
    let status = unsafe { dg_centroid(kl.0, points.as_ptr(), 2, 3, ptr::null(), ptr::null(), &mut uniform) };
    assert_eq!(status, DgStatus::Ok);
    let uniform = Report(uniform);
    for (got, want) in uniform.solution().iter().zip([0.4, 0.2, 0.4]) {
        assert!((got - want).abs() <= 1e-10);
    }
}

#[test]
fn euclidean_ball_projection_is_analytic() {
    let euclidean = Spec::new("euclidean", None, f64::NAN);
    let (center, q) = ([0.5, 0.5], [0.1, 0.9]);
    let mut out = ptr::null_mut();
    let status = unsafe { dg_project_ball(euclidean.0, center.as_ptr(), q.as_ptr(), 2, 0.04, ptr::null(), &mut out) };
    assert_eq!(status, DgStatus::Ok);
    let report = Report(out);
    let m = report.solution();
    assert!((m[0] - 0.3).abs() <= 1e-12 && (m[1] - 0.7).abs() <= 1e-12);
    let mut alpha = 0.0;
    assert_eq!(unsafe { dg_report_alpha_star(report.0, &mut alpha) }, DgStatus::Ok);
    assert!((alpha - 0.5).abs() <= 1e-12);
    let mut beta = [0.0];
    assert_eq!(unsafe { dg_report_beta(report.0, beta.as_mut_ptr(), 1) }, DgStatus::Unavailable);
    let (mut st, mut cons) = (1.0, 1.0);
    assert_eq!(unsafe { dg_report_residuals(report.0, &mut st, &mut cons) }, DgStatus::Ok);
    assert!(st <= 1e-10 && cons <= 1e-10);
    assert!(unsafe { dg_report_iterations(report.0) } > 0);
}

#[test]
fn kl_moment_projection_matches_reference() {
    let kl = Spec::new("kl", None, f64::NAN);
    let p = [1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0];
    let (stats, targets) = ([0.0, 1.0, 2.0], [1.2]);
    let mut out = ptr::null_mut();
    let status =
        unsafe { dg_project_moments(kl.0, p.as_ptr(), 3, stats.as_ptr(), targets.as_ptr(), 1, ptr::null(), &mut out) };
    assert_eq!(status, DgStatus::Ok, "{}", last_error());
    let report = Report(out);
    let reference = [0.243_050_087_404_306_04, 0.313_899_825_191_387_92, 0.443_050_087_404_306_04];
    for (got, want) in report.solution().iter().zip(reference) {
        assert!((got - want).abs() <= 1e-9);
    }
    assert_eq!(unsafe { dg_report_beta_len(report.0) }, 1);
    let (mut beta, mut c) = ([0.0], 0.0);
    assert_eq!(unsafe { dg_report_beta(report.0, beta.as_mut_ptr(), 1) }, DgStatus::Ok);
    assert_eq!(unsafe { dg_report_multiplier_c(report.0, &mut c) }, DgStatus::Ok);
    assert!((beta[0] + 0.309_549_521_572_632_35).abs() <= 1e-8, "{beta:?}");
    assert!((c + 1.371_459_425_887_158_8).abs() <= 1e-8, "{c}");
}

#[test]
fn bregman_vector_centroid_is_the_weighted_mean() {
    let name = CString::new("xlogx").unwrap();
    let points = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let weights = [0.2, 0.3, 0.5];
    let mut mean = [0.0; 2];
    let status = unsafe {
        dg_bregman_centroid_vector(name.as_ptr(), points.as_ptr(), 3, 2, weights.as_ptr(), mean.as_mut_ptr())
    };
    assert_eq!(status, DgStatus::Ok);
    assert!((mean[0] - 3.6).abs() <= 1e-15 && (mean[1] - 4.6).abs() <= 1e-15);
}

#[test]
fn failures_report_status_and_message() {
    let kl = Spec::new("kl", None, f64::NAN);
    let q = [0.25, 0.75];
    let mut v = 0.0;
    let cases: [([f64; 2], DgStatus); 3] = [
        ([0.5, 0.6], DgStatus::InvalidDistribution),
        ([-0.5, 1.5], DgStatus::InvalidDistribution),
        ([0.0, 1.0], DgStatus::DomainViolation),
    ];
    for (p, status) in cases {
        assert_eq!(unsafe { dg_eval(kl.0, p.as_ptr(), q.as_ptr(), 2, ptr::null(), &mut v) }, status);
        assert!(!last_error().is_empty());
    }
    assert_eq!(unsafe { dg_eval(ptr::null(), q.as_ptr(), q.as_ptr(), 2, ptr::null(), &mut v) }, DgStatus::NullPointer);
    assert_eq!(
        unsafe { dg_eval(kl.0, q.as_ptr(), q.as_ptr(), 2, ptr::null(), ptr::null_mut()) },
        DgStatus::NullPointer
    );

    let family = CString::new("nope").unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { dg_spec_new(family.as_ptr(), ptr::null(), f64::NAN, &mut spec) }, DgStatus::InvalidArgument);
    assert!(spec.is_null());

    let mut cfg = dg_config_default();
    cfg.solver_tol = -1.0;
    assert_eq!(unsafe { dg_eval(kl.0, q.as_ptr(), q.as_ptr(), 2, &cfg, &mut v) }, DgStatus::InvalidArgument);

    let (p, stats, targets) = ([0.2, 0.3, 0.5], [0.0, 1.0, 2.0], [3.0]);
    let mut out = ptr::null_mut();
    let status =
        unsafe { dg_project_moments(kl.0, p.as_ptr(), 3, stats.as_ptr(), targets.as_ptr(), 1, ptr::null(), &mut out) };
    assert_eq!(status, DgStatus::Infeasible);
    assert!(out.is_null());

    let euclidean = Spec::new("euclidean", None, f64::NAN);
    let (p, targets) = ([0.1, 0.1, 0.8], [1.95]);
    let status = unsafe {
        dg_project_moments(euclidean.0, p.as_ptr(), 3, stats.as_ptr(), targets.as_ptr(), 1, ptr::null(), &mut out)
    };
    assert_eq!(status, DgStatus::NonConvergence);

    let (center, far) = ([0.5, 0.5], [0.1, 0.9]);
    assert_eq!(
        unsafe { dg_project_ball(euclidean.0, center.as_ptr(), far.as_ptr(), 2, 0.04, ptr::null(), &mut out) },
        DgStatus::Ok
    );
    let report = Report(out);
    let mut small = [0.0; 1];
    assert_eq!(unsafe { dg_report_solution(report.0, small.as_mut_ptr(), 1) }, DgStatus::BufferTooSmall);
}

#[test]
fn null_handles_are_tolerated_where_documented() {
    unsafe {
        dg_spec_free(ptr::null_mut());
        dg_report_free(ptr::null_mut());
        assert_eq!(dg_report_support_size(ptr::null()), 0);
        assert_eq!(dg_report_beta_len(ptr::null()), 0);
        assert_eq!(dg_report_iterations(ptr::null()), 0);
        assert!(!dg_report_converged(ptr::null()));
    }
}

#[test]
fn status_names_and_version() {
    let name = |s: i32| unsafe { CStr::from_ptr(dg_status_name(s)) }.to_str().unwrap();
    assert_eq!(name(DgStatus::Ok as i32), "ok");
    assert_eq!(name(DgStatus::Panic as i32), "panic");
    assert_eq!(name(42), "unknown");
    let version = unsafe { CStr::from_ptr(dg_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}
