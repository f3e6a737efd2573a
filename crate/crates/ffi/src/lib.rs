//! C interface to `critpatch`.
//!
//! Every function returns a [`CpStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and can be read with
//! [`cp_last_error`]. Profiles and simulation reports are opaque handles
//! owned by the caller and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use critpatch::dist::{beta_function, ln_beta, solve_gamma, FamilyId, InitialProfile, ShapeParam, GAMMA_TOL};
use critpatch::scaling::{
    compute_q, critical_habitat, critical_population, ModelExponents, NondimProblem, PhysicalParams, SurvivalDirection,
};
use critpatch::solver::{classify_fate, thomas_solve_into, FatePolicy, FateReport, Outcome, Resolution, TimeStep};
use critpatch::threshold::{
    default_q_start, estimate_alpha_min, estimate_qc, ScanConfig, ScanStatus, ThresholdEstimate, DEFAULT_ALPHA_START,
};
use critpatch::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    UnsupportedRegime = 4,
    DegenerateCase = 5,
    Convergence = 6,
    SingularSystem = 7,
    Instability = 8,
    ScanFailed = 9,
    BufferTooSmall = 10,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpFamily {
    Homogeneous = 0,
    F1 = 1,
    F2 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpOutcome {
    Extinction = 0,
    Growth = 1,
    Inconclusive = 2,
}

/// Grid settings. `k > 0` fixes the time step, otherwise `k = ratio·h²`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpResolution {
    pub m: usize,
    pub ratio: f64,
    pub k: f64,
    pub t_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpEstimate {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub evaluations: usize,
    /// Nonzero when α = 0 already survives.
    pub already_survives: i32,
    /// Nonzero when the growth end is the scan start.
    pub capped: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpReportSummary {
    pub outcome: CpOutcome,
    pub stop_time: f64,
    pub steps: usize,
    pub initial_population: f64,
    pub final_population: f64,
    pub samples: usize,
}

/// Opaque initial distribution.
pub struct CpProfile(InitialProfile);

/// Opaque simulation result.
pub struct CpReport(FateReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CpStatus {
    match e {
        Error::Domain(_) => CpStatus::Domain,
        Error::InvalidParameter(_) | Error::Io(_) => CpStatus::InvalidArgument,
        Error::UnsupportedRegime { .. } => CpStatus::UnsupportedRegime,
        Error::DegenerateHabitat { .. } | Error::PopulationUnconstrained { .. } => CpStatus::DegenerateCase,
        Error::Convergence(_) => CpStatus::Convergence,
        Error::SingularSystem { .. } => CpStatus::SingularSystem,
        Error::Instability { .. } => CpStatus::Instability,
        Error::BadStart { .. } | Error::ScanExhausted { .. } | Error::Undecided { .. } | Error::NonMonotone(_) => {
            CpStatus::ScanFailed
        }
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), CpStatus>>(f: F) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            CpStatus::Panic
        }
    }
}

fn fail(e: Error) -> CpStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(name: &str) -> CpStatus {
    set_error(format!("{name} is null"));
    CpStatus::NullPointer
}

/// Writes `v` through `out` after a null check.
unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Result<(), CpStatus> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

/// Families cross the boundary as plain integers so an out-of-range value
/// from C is an error rather than an invalid enum.
fn family(f: i32) -> Result<FamilyId, CpStatus> {
    match f {
        x if x == CpFamily::Homogeneous as i32 => Ok(FamilyId::Homogeneous),
        x if x == CpFamily::F1 as i32 => Ok(FamilyId::SymmetricF1),
        x if x == CpFamily::F2 as i32 => Ok(FamilyId::AsymmetricF2),
        other => Err(fail(Error::InvalidParameter(format!("unknown family code {other}")))),
    }
}

fn outcome(o: Outcome) -> CpOutcome {
    match o {
        Outcome::Extinction => CpOutcome::Extinction,
        Outcome::Growth => CpOutcome::Growth,
        Outcome::Inconclusive => CpOutcome::Inconclusive,
    }
}

unsafe fn resolution(r: *const CpResolution) -> Resolution {
    match r.as_ref() {
        None => Resolution::default(),
        Some(r) => Resolution {
            m: r.m,
            time_step: if r.k > 0.0 {
                TimeStep::Fixed(r.k)
            } else {
                TimeStep::DiffusiveRatio(r.ratio)
            },
            t_max: r.t_max,
        },
    }
}

fn estimate(e: ThresholdEstimate) -> CpEstimate {
    CpEstimate {
        lower: e.lower,
        upper: e.upper,
        estimate: e.estimate,
        evaluations: e.evaluations,
        already_survives: (e.status == ScanStatus::AlreadySurvives) as i32,
        capped: e.capped as i32,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated). `needed`, if not null, receives the required size. Returns
/// `BufferTooSmall` when `len` is insufficient.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn cp_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> CpStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone()).unwrap_or_default();
    let bytes = msg.as_bytes_with_nul();
    if let Some(n) = needed.as_mut() {
        *n = bytes.len();
    }
    if buf.is_null() || len < bytes.len() {
        return CpStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, bytes.len());
    CpStatus::Ok
}

/// Default grid: 200 intervals, `k = h²/4`, horizon 50.
#[no_mangle]
pub extern "C" fn cp_resolution_default() -> CpResolution {
    let d = Resolution::default();
    let ratio = match d.time_step {
        TimeStep::DiffusiveRatio(r) => r,
        TimeStep::Fixed(_) => 0.25,
    };
    CpResolution {
        m: d.m,
        ratio,
        k: 0.0,
        t_max: d.t_max,
    }
}

/// `ln B(p, q)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_ln_beta(p: f64, q: f64, out: *mut f64) -> CpStatus {
    guard(|| put(out, ln_beta(p, q).map_err(fail)?, "out"))
}

/// `B(p, q)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_beta(p: f64, q: f64, out: *mut f64) -> CpStatus {
    guard(|| put(out, beta_function(p, q).map_err(fail)?, "out"))
}

/// Shape parameter γ(α) of the asymmetric family.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_solve_gamma(alpha: f64, out: *mut f64) -> CpStatus {
    guard(|| {
        let a = ShapeParam::new(alpha).map_err(fail)?;
        put(out, solve_gamma(a, GAMMA_TOL).map_err(fail)?, "out")
    })
}

/// Survival parameter `Q = (a/D)·l^{2+ν-μ}·n0^{μ-ν}`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_compute_q(mu: f64, nu: f64, a: f64, d: f64, l: f64, n0: f64, out: *mut f64) -> CpStatus {
    guard(|| {
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        let phys = PhysicalParams::new(a, d, l, n0).map_err(fail)?;
        put(out, compute_q(exps, phys), "out")
    })
}

/// Critical habitat length. `is_minimum` receives 1 when survival needs
/// `l >= size` and 0 when it needs `l <= size`. At μ = ν + 2 returns
/// `DegenerateCase` and writes the critical population to `size`.
///
/// # Safety
/// `size` and `is_minimum` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_critical_habitat(
    mu: f64,
    nu: f64,
    qc: f64,
    a: f64,
    d: f64,
    n0: f64,
    size: *mut f64,
    is_minimum: *mut i32,
) -> CpStatus {
    guard(|| {
        if size.is_null() || is_minimum.is_null() {
            return Err(null("size or is_minimum"));
        }
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        match critical_habitat(exps, qc, a, d, n0) {
            Ok(h) => {
                *size = h.size;
                *is_minimum = (h.direction == SurvivalDirection::MinimumSize) as i32;
                Ok(())
            }
            Err(e @ Error::DegenerateHabitat { n0_critical, .. }) => {
                *size = n0_critical;
                Err(fail(e))
            }
            Err(e) => Err(fail(e)),
        }
    })
}

/// Critical total population for habitat length `l` (μ > ν).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_critical_population(
    mu: f64,
    nu: f64,
    qc: f64,
    a: f64,
    d: f64,
    l: f64,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        put(out, critical_population(exps, qc, a, d, l).map_err(fail)?, "out")
    })
}

/// Solves an `n × n` tridiagonal system. `lower` and `upper` hold `n - 1`
/// entries (`lower[i]` is row `i+1`, column `i`).
///
/// # Safety
/// `diag`, `rhs` and `out` must hold `n` values; `lower` and `upper` must
/// hold `n - 1` values (they may be null when `n == 1`).
#[no_mangle]
pub unsafe extern "C" fn cp_thomas_solve(
    lower: *const f64,
    diag: *const f64,
    upper: *const f64,
    rhs: *const f64,
    n: usize,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        if n == 0 {
            return Err(fail(Error::InvalidParameter("n must be at least 1".into())));
        }
        if diag.is_null() || rhs.is_null() || out.is_null() {
            return Err(null("diag, rhs or out"));
        }
        if n > 1 && (lower.is_null() || upper.is_null()) {
            return Err(null("lower or upper"));
        }
        let off = |p: *const f64| {
            if n > 1 {
                std::slice::from_raw_parts(p, n - 1)
            } else {
                &[][..]
            }
        };
        let (lo, up) = (off(lower), off(upper));
        let d = std::slice::from_raw_parts(diag, n);
        let r = std::slice::from_raw_parts(rhs, n);
        let x = std::slice::from_raw_parts_mut(out, n);
        let mut scratch = vec![0.0; n];
        thomas_solve_into(lo, d, up, r, &mut scratch, x).map_err(fail)
    })
}

/// Creates an initial distribution; `fam` is a `CpFamily` value. Release with [`cp_profile_free`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_profile_new(fam: i32, alpha: f64, out: *mut *mut CpProfile) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = ShapeParam::new(alpha).map_err(fail)?;
        let p = InitialProfile::new(family(fam)?, a).map_err(fail)?;
        *out = Box::into_raw(Box::new(CpProfile(p)));
        Ok(())
    })
}

/// # Safety
/// `profile` must come from [`cp_profile_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_profile_free(profile: *mut CpProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// γ(α) of the profile (0 unless asymmetric).
///
/// # Safety
/// `profile` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_profile_gamma(profile: *const CpProfile, out: *mut f64) -> CpStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        put(out, p.0.gamma_of_alpha, "out")
    })
}

/// Nondimensional initial density at `x` for exponents `(mu, nu)` and
/// survival parameter `q`.
///
/// # Safety
/// `profile` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_profile_eval(
    profile: *const CpProfile,
    x: f64,
    mu: f64,
    nu: f64,
    q: f64,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        put(out, p.0.eval_nondim(x, exps, q).map_err(fail)?, "out")
    })
}

/// Integrates and classifies one run with the default fate policy.
/// `res` may be null for the default grid. Release the report with
/// [`cp_report_free`].
///
/// # Safety
/// `profile` must be a live handle, `res` null or valid, `out` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn cp_simulate(
    profile: *const CpProfile,
    mu: f64,
    nu: f64,
    q: f64,
    res: *const CpResolution,
    out: *mut *mut CpReport,
) -> CpStatus {
    guard(|| {
        let p = profile.as_ref().ok_or_else(|| null("profile"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        let problem = NondimProblem::from_q(exps, q, p.0).map_err(fail)?;
        let grid = resolution(res).grid(problem.length).map_err(fail)?;
        let report = classify_fate(&problem, &grid, &FatePolicy::default()).map_err(fail)?;
        *out = Box::into_raw(Box::new(CpReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`cp_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_report_free(report: *mut CpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_report_summary(report: *const CpReport, out: *mut CpReportSummary) -> CpStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let s = CpReportSummary {
            outcome: outcome(r.outcome),
            stop_time: r.stop_time,
            steps: r.steps,
            initial_population: r.initial_population,
            final_population: r.final_population(),
            samples: r.trajectory.len(),
        };
        put(out, s, "out")
    })
}

/// Copies up to `capacity` `(T, N)` samples; `written` receives the count.
/// Returns `BufferTooSmall` if the trajectory was truncated.
///
/// # Safety
/// `times` and `pops` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cp_report_trajectory(
    report: *const CpReport,
    times: *mut f64,
    pops: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CpStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if (times.is_null() || pops.is_null()) && capacity > 0 {
            return Err(null("times or pops"));
        }
        let n = r.trajectory.len().min(capacity);
        for (i, &(t, v)) in r.trajectory.iter().take(n).enumerate() {
            *times.add(i) = t;
            *pops.add(i) = v;
        }
        put(written, n, "written")?;
        if n < r.trajectory.len() {
            set_error(format!("trajectory has {} samples", r.trajectory.len()));
            return Err(CpStatus::BufferTooSmall);
        }
        Ok(())
    })
}

fn scan_config(start: f64, default_start: f64, step: f64) -> Result<ScanConfig, CpStatus> {
    let start = if start > 0.0 { start } else { default_start };
    ScanConfig::new(start, step).map_err(fail)
}

/// `Q_c(μ, ν, α)` by a descending scan with step `step`. `start <= 0`
/// selects the default start; `res` may be null.
///
/// # Safety
/// `res` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_estimate_qc(
    mu: f64,
    nu: f64,
    fam: i32,
    alpha: f64,
    start: f64,
    step: f64,
    res: *const CpResolution,
    out: *mut CpEstimate,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        let a = ShapeParam::new(alpha).map_err(fail)?;
        let cfg = scan_config(start, default_q_start(mu), step)?;
        let est = estimate_qc(exps, family(fam)?, a, &cfg, &resolution(res), &FatePolicy::default()).map_err(fail)?;
        put(out, estimate(est), "out")
    })
}

/// `α_min(μ, ν, Q)` by a descending α scan. `start <= 0` selects the
/// default start of 1000; `res` may be null.
///
/// # Safety
/// `res` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_estimate_alpha_min(
    mu: f64,
    nu: f64,
    fam: i32,
    q: f64,
    start: f64,
    step: f64,
    res: *const CpResolution,
    out: *mut CpEstimate,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let exps = ModelExponents::new(mu, nu).map_err(fail)?;
        let cfg = scan_config(start, DEFAULT_ALPHA_START, step)?;
        let est =
            estimate_alpha_min(exps, family(fam)?, q, &cfg, &resolution(res), &FatePolicy::default()).map_err(fail)?;
        put(out, estimate(est), "out")
    })
}
