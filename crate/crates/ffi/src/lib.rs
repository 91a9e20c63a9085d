//! C ABI for divgeom.
//!
//! Divergence specs and solver reports cross the boundary as opaque handles
//! that the caller releases with the matching `*_free` function.
//! Distributions are plain `double` arrays of length `n` on the atoms
//! `0, 1, ..., n-1`. Every fallible function returns a [`DgStatus`]; on
//! failure [`dg_last_error`] describes the problem on the calling thread.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use divgeom::{
    bregman_centroid_vector, centroid, eval, grad_first, grad_second, inner_product, line_point, project_ball,
    project_moments, BallSpec, CentroidProblem, DiscreteDistribution, DivError, DivergenceSpec, GeneratorName,
    GeneratorSpec, MomentConstraintSet, NumericConfig, SolverReport,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed spec, configuration, weights, dimensions or constraint set.
    InvalidArgument = 2,
    /// A mass vector is not a probability distribution.
    InvalidDistribution = 3,
    /// A mass lies outside the domain of the divergence.
    DomainViolation = 4,
    /// The moment constraints have no interior point.
    Infeasible = 5,
    /// A solver exhausted its budget or no interior solution exists.
    NonConvergence = 6,
    /// An output buffer is shorter than the value it should receive.
    BufferTooSmall = 7,
    /// The requested quantity does not exist for this divergence or report.
    Unavailable = 8,
    /// An internal error was caught at the boundary.
    Panic = 9,
}

/// Numeric tolerances, mirroring the library defaults of [`dg_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgConfig {
    pub simplex_tol: f64,
    pub interior_floor: f64,
    pub grad_fd_step: f64,
    pub solver_tol: f64,
    pub max_iter: usize,
}

impl From<NumericConfig> for DgConfig {
    fn from(c: NumericConfig) -> Self {
        Self {
            simplex_tol: c.simplex_tol,
            interior_floor: c.interior_floor,
            grad_fd_step: c.grad_fd_step,
            solver_tol: c.solver_tol,
            max_iter: c.max_iter,
        }
    }
}

impl From<DgConfig> for NumericConfig {
    fn from(c: DgConfig) -> Self {
        Self {
            simplex_tol: c.simplex_tol,
            interior_floor: c.interior_floor,
            grad_fd_step: c.grad_fd_step,
            solver_tol: c.solver_tol,
            max_iter: c.max_iter,
        }
    }
}

/// Opaque divergence specification.
pub struct DgSpec(DivergenceSpec);

/// Opaque solver result.
pub struct DgReport(SolverReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: DgStatus,
    message: String,
}

impl Failure {
    fn new(status: DgStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn null(what: &str) -> Self {
        Self::new(DgStatus::NullPointer, format!("`{what}` is null"))
    }
}

impl From<DivError> for Failure {
    fn from(e: DivError) -> Self {
        let status = match &e {
            DivError::EmptySupport(_)
            | DivError::NegativeMass { .. }
            | DivError::NonFiniteMass { .. }
            | DivError::ZeroTotalMass
            | DivError::NotNormalized { .. } => DgStatus::InvalidDistribution,
            DivError::DomainViolation { .. } => DgStatus::DomainViolation,
            DivError::InfeasibleConstraints(_) => DgStatus::Infeasible,
            DivError::NonConvergence { .. } => DgStatus::NonConvergence,
            DivError::UnsupportedDerivative { .. } => DgStatus::Unavailable,
            DivError::SupportMismatch { .. }
            | DivError::InvalidSpec(_)
            | DivError::InvalidConfig(_)
            | DivError::InvalidWeights(_)
            | DivError::DimensionMismatch { .. }
            | DivError::InvalidConstraints(_)
            | DivError::CheckFailed { .. } => DgStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn run(f: impl FnOnce() -> Result<(), Failure>) -> DgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DgStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic caught at the C boundary".into());
            DgStatus::Panic
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn write<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn spec_ref<'a>(ptr: *const DgSpec) -> Result<&'a DivergenceSpec, Failure> {
    ptr.as_ref().map(|s| &s.0).ok_or_else(|| Failure::null("spec"))
}

unsafe fn report_ref<'a>(ptr: *const DgReport) -> Result<&'a SolverReport, Failure> {
    ptr.as_ref().map(|r| &r.0).ok_or_else(|| Failure::null("report"))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if ptr.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(Some)
        .map_err(|_| Failure::new(DgStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn config(ptr: *const DgConfig) -> Result<NumericConfig, Failure> {
    let cfg = ptr.as_ref().map_or_else(NumericConfig::default, |c| NumericConfig::from(*c));
    cfg.validate()?;
    Ok(cfg)
}

fn distribution(mass: &[f64], cfg: &NumericConfig) -> Result<DiscreteDistribution, Failure> {
    Ok(DiscreteDistribution::new(mass.to_vec(), None, cfg)?)
}

fn copy_into(out: &mut [f64], values: &[f64]) -> Result<(), Failure> {
    if out.len() < values.len() {
        return Err(Failure::new(
            DgStatus::BufferTooSmall,
            format!("buffer holds {} values, {} needed", out.len(), values.len()),
        ));
    }
    out[..values.len()].copy_from_slice(values);
    Ok(())
}

unsafe fn emit_report(out: *mut *mut DgReport, r: SolverReport) -> Result<(), Failure> {
    write(out, Box::into_raw(Box::new(DgReport(r))), "out_report")
}

/// Library defaults.
#[no_mangle]
pub extern "C" fn dg_config_default() -> DgConfig {
    NumericConfig::default().into()
}

/// Message describing the last failed call on this thread, or null after a
/// successful call. The string stays valid until the next call on the thread.
#[no_mangle]
pub extern "C" fn dg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code, such as `"non_convergence"`.
#[no_mangle]
pub extern "C" fn dg_status_name(status: i32) -> *const c_char {
    let name: &'static CStr = match status {
        0 => c"ok",
        1 => c"null_pointer",
        2 => c"invalid_argument",
        3 => c"invalid_distribution",
        4 => c"domain_violation",
        5 => c"infeasible",
        6 => c"non_convergence",
        7 => c"buffer_too_small",
        8 => c"unavailable",
        9 => c"panic",
        _ => c"unknown",
    };
    name.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a divergence spec from a family name (`euclidean`, `kl`,
/// `reverse_kl`, `bregman`, `f_divergence`, `renyi`), an optional generator
/// name (null when unused) and a Rényi order (NaN when unused).
///
/// # Safety
/// `family` and a non-null `generator` must be NUL-terminated strings and
/// `out_spec` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dg_spec_new(
    family: *const c_char,
    generator: *const c_char,
    order: f64,
    out_spec: *mut *mut DgSpec,
) -> DgStatus {
    run(|| {
        let family = text(family, "family")?.ok_or_else(|| Failure::null("family"))?;
        let generator = text(generator, "generator")?;
        let order = (!order.is_nan()).then_some(order);
        let spec = DivergenceSpec::from_parts(family, generator, order)?;
        write(out_spec, Box::into_raw(Box::new(DgSpec(spec))), "out_spec")
    })
}

/// Releases a spec. Null is ignored.
///
/// # Safety
/// `spec` must come from [`dg_spec_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dg_spec_free(spec: *mut DgSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// `D(P‖Q)` for distributions of length `n`.
///
/// # Safety
/// `p` and `q` must point to `n` doubles; `cfg` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn dg_eval(
    spec: *const DgSpec,
    p: *const f64,
    q: *const f64,
    n: usize,
    cfg: *const DgConfig,
    out_value: *mut f64,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let p = distribution(input(p, n, "p")?, &cfg)?;
        let q = distribution(input(q, n, "q")?, &cfg)?;
        write(out_value, eval(spec_ref(spec)?, &p, &q, &cfg)?, "out_value")
    })
}

/// `δD(P‖Q)/δq` written to `out_values[0..n]`.
///
/// # Safety
/// `p`, `q` and `out_values` must point to `n` doubles; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn dg_grad_second(
    spec: *const DgSpec,
    p: *const f64,
    q: *const f64,
    n: usize,
    cfg: *const DgConfig,
    out_values: *mut f64,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let p = distribution(input(p, n, "p")?, &cfg)?;
        let q = distribution(input(q, n, "q")?, &cfg)?;
        let g = grad_second(spec_ref(spec)?, &p, &q, &cfg)?;
        copy_into(output(out_values, n, "out_values")?, &g.values)
    })
}

/// `δD(P‖Q)/δp` written to `out_values[0..n]`; `UNAVAILABLE` for Rényi.
///
/// # Safety
/// `p`, `q` and `out_values` must point to `n` doubles; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn dg_grad_first(
    spec: *const DgSpec,
    p: *const f64,
    q: *const f64,
    n: usize,
    cfg: *const DgConfig,
    out_values: *mut f64,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let p = distribution(input(p, n, "p")?, &cfg)?;
        let q = distribution(input(q, n, "q")?, &cfg)?;
        let g = grad_first(spec_ref(spec)?, &p, &q, &cfg)?;
        copy_into(output(out_values, n, "out_values")?, &g.values)
    })
}

/// Divergence inner product `⟨PQ‖RQ⟩`.
///
/// # Safety
/// `p`, `q` and `r` must point to `n` doubles; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn dg_inner_product(
    spec: *const DgSpec,
    p: *const f64,
    q: *const f64,
    r: *const f64,
    n: usize,
    cfg: *const DgConfig,
    out_value: *mut f64,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let p = distribution(input(p, n, "p")?, &cfg)?;
        let q = distribution(input(q, n, "q")?, &cfg)?;
        let r = distribution(input(r, n, "r")?, &cfg)?;
        write(out_value, inner_product(spec_ref(spec)?, &p, &q, &r, &cfg)?, "out_value")
    })
}

/// Point of the divergence line at position `alpha`, written to
/// `out_mass[0..n]`. The multiplier and residual are written when their
/// pointers are non-null.
///
/// # Safety
/// `p`, `q` and `out_mass` must point to `n` doubles; `cfg`,
/// `out_multiplier` and `out_residual` may be null.
#[no_mangle]
pub unsafe extern "C" fn dg_line_point(
    spec: *const DgSpec,
    p: *const f64,
    q: *const f64,
    n: usize,
    alpha: f64,
    cfg: *const DgConfig,
    out_mass: *mut f64,
    out_multiplier: *mut f64,
    out_residual: *mut f64,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let p = distribution(input(p, n, "p")?, &cfg)?;
        let q = distribution(input(q, n, "q")?, &cfg)?;
        let line = line_point(spec_ref(spec)?, &p, &q, alpha, &cfg)?;
        copy_into(output(out_mass, n, "out_mass")?, line.point.mass())?;
        if !out_multiplier.is_null() {
            out_multiplier.write(line.multiplier);
        }
        if !out_residual.is_null() {
            out_residual.write(line.residual);
        }
        Ok(())
    })
}

/// Weighted centroid of `count` distributions stored row by row in
/// `points[0..count*n]`. Null `weights` means uniform weights.
///
/// # Safety
/// `points` must point to `count*n` doubles, a non-null `weights` to
/// `count` doubles; `cfg` may be null; `out_report` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dg_centroid(
    spec: *const DgSpec,
    points: *const f64,
    count: usize,
    n: usize,
    weights: *const f64,
    cfg: *const DgConfig,
    out_report: *mut *mut DgReport,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let spec = spec_ref(spec)?.clone();
        let flat = input(points, count * n, "points")?;
        let points =
            flat.chunks(n.max(1)).take(count).map(|row| distribution(row, &cfg)).collect::<Result<Vec<_>, _>>()?;
        let problem = if weights.is_null() {
            CentroidProblem::uniform(spec, points, &cfg)?
        } else {
            CentroidProblem::new(spec, points, input(weights, count, "weights")?.to_vec(), &cfg)?
        };
        emit_report(out_report, centroid(&problem, &cfg)?)
    })
}

/// Projection of `q` onto the ball `{R : D(center‖R) ≤ kappa}`.
///
/// # Safety
/// `center` and `q` must point to `n` doubles; `cfg` may be null;
/// `out_report` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dg_project_ball(
    spec: *const DgSpec,
    center: *const f64,
    q: *const f64,
    n: usize,
    kappa: f64,
    cfg: *const DgConfig,
    out_report: *mut *mut DgReport,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let center = distribution(input(center, n, "center")?, &cfg)?;
        let q = distribution(input(q, n, "q")?, &cfg)?;
        let ball = BallSpec::new(center, kappa, spec_ref(spec)?.clone(), &cfg)?;
        emit_report(out_report, project_ball(&ball, &q, &cfg)?)
    })
}

/// Projection of `p` onto `{R : Σ_z T_k(z) r_z = m_k}` for the `k` statistics
/// stored row by row in `statistics[0..k*n]` and targets `targets[0..k]`.
///
/// # Safety
/// `p` must point to `n` doubles, `statistics` to `k*n` and `targets` to `k`;
/// `cfg` may be null; `out_report` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dg_project_moments(
    spec: *const DgSpec,
    p: *const f64,
    n: usize,
    statistics: *const f64,
    targets: *const f64,
    k: usize,
    cfg: *const DgConfig,
    out_report: *mut *mut DgReport,
) -> DgStatus {
    run(|| {
        let cfg = config(cfg)?;
        let p = distribution(input(p, n, "p")?, &cfg)?;
        let rows = input(statistics, k * n, "statistics")?.chunks(n.max(1)).take(k).map(<[f64]>::to_vec).collect();
        let constraints = MomentConstraintSet::new(rows, input(targets, k, "targets")?.to_vec())?;
        emit_report(out_report, project_moments(spec_ref(spec)?, &p, &constraints, &cfg)?)
    })
}

/// Weighted mean of `count` vectors of dimension `dim`, which minimizes the
/// weighted Bregman divergence to them for the named generator.
///
/// # Safety
/// `generator` must be a NUL-terminated string, `points` must point to
/// `count*dim` doubles, `weights` to `count` and `out_mean` to `dim`.
#[no_mangle]
pub unsafe extern "C" fn dg_bregman_centroid_vector(
    generator: *const c_char,
    points: *const f64,
    count: usize,
    dim: usize,
    weights: *const f64,
    out_mean: *mut f64,
) -> DgStatus {
    run(|| {
        let name = text(generator, "generator")?.ok_or_else(|| Failure::null("generator"))?;
        let name: GeneratorName = name.parse()?;
        let rows: Vec<Vec<f64>> =
            input(points, count * dim, "points")?.chunks(dim.max(1)).take(count).map(<[f64]>::to_vec).collect();
        let weights = input(weights, count, "weights")?;
        let mean = bregman_centroid_vector(&GeneratorSpec::builtin(name), &rows, weights)?;
        copy_into(output(out_mean, dim, "out_mean")?, &mean)
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from a solver call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dg_report_free(report: *mut DgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of atoms of the solution, or 0 for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn dg_report_support_size(report: *const DgReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.solution.support_size())
}

/// Copies the solution mass into `out[0..len]`.
///
/// # Safety
/// `report` must be a live report and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dg_report_solution(report: *const DgReport, out: *mut f64, len: usize) -> DgStatus {
    run(|| copy_into(output(out, len, "out")?, report_ref(report)?.solution.mass()))
}

/// Normalization multiplier `C`.
///
/// # Safety
/// `report` must be a live report and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dg_report_multiplier_c(report: *const DgReport, out: *mut f64) -> DgStatus {
    run(|| write(out, report_ref(report)?.multipliers.c, "out"))
}

/// Number of moment multipliers, 0 unless the report is a moment projection.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn dg_report_beta_len(report: *const DgReport) -> usize {
    report.as_ref().and_then(|r| r.0.multipliers.beta.as_ref()).map_or(0, Vec::len)
}

/// Copies the moment multipliers into `out[0..len]`.
///
/// # Safety
/// `report` must be a live report and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dg_report_beta(report: *const DgReport, out: *mut f64, len: usize) -> DgStatus {
    run(|| {
        let beta = report_ref(report)?
            .multipliers
            .beta
            .as_ref()
            .ok_or_else(|| Failure::new(DgStatus::Unavailable, "report has no moment multipliers"))?;
        copy_into(output(out, len, "out")?, beta)
    })
}

/// Line position `α*` of a ball projection.
///
/// # Safety
/// `report` must be a live report and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dg_report_alpha_star(report: *const DgReport, out: *mut f64) -> DgStatus {
    run(|| {
        let alpha = report_ref(report)?
            .multipliers
            .alpha_star
            .ok_or_else(|| Failure::new(DgStatus::Unavailable, "report is not a ball projection"))?;
        write(out, alpha, "out")
    })
}

/// Stationarity and constraint residuals of the solution.
///
/// # Safety
/// `report` must be a live report and both outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dg_report_residuals(
    report: *const DgReport,
    out_stationarity: *mut f64,
    out_constraint: *mut f64,
) -> DgStatus {
    run(|| {
        let r = report_ref(report)?;
        if out_constraint.is_null() {
            return Err(Failure::null("out_constraint"));
        }
        write(out_stationarity, r.stationarity_residual, "out_stationarity")?;
        write(out_constraint, r.constraint_residual, "out_constraint")
    })
}

/// Solver iterations, or 0 for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn dg_report_iterations(report: *const DgReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.iterations)
}

/// Whether the solver met its tolerance; false for a null report.
///
/// # Safety
/// `report` must be null or a live report.
#[no_mangle]
pub unsafe extern "C" fn dg_report_converged(report: *const DgReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.converged)
}
