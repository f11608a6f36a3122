//! C ABI over the `choquard` crate.
//!
//! Grids, fields and kernels are opaque heap handles released with their
//! `_free` function. Every fallible call returns a [`ChqStatus`]; on failure
//! the message is available from [`chq_last_error`] on the same thread.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use choquard::bubbles::{bubble, BubbleSpec};
use choquard::level::{minimize_nehari, subadditivity_gap, verify_constraint_level, verify_nehari_level, LevelReport};
use choquard::radial::{schwarz_rearrange, RadialField, RadialGrid, SharedGrid};
use choquard::variational::{energy_breakdown, nehari_project};
use choquard::{ConstantsReport, EnergyBreakdown, Error, KernelMatrix, ProblemParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChqStatus {
    Ok = 0,
    Domain = 1,
    Config = 2,
    Regime = 3,
    Data = 4,
    GridMismatch = 5,
    Degenerate = 6,
    Bracket = 7,
    Infeasible = 8,
    Unsupported = 9,
    Convergence = 10,
    Stagnation = 11,
    Consistency = 12,
    Io = 13,
    NullPointer = 14,
    Panic = 15,
}

impl From<&Error> for ChqStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => ChqStatus::Domain,
            Error::Config(_) => ChqStatus::Config,
            Error::Regime(_) => ChqStatus::Regime,
            Error::Data(_) => ChqStatus::Data,
            Error::GridMismatch(_) => ChqStatus::GridMismatch,
            Error::Degenerate(_) => ChqStatus::Degenerate,
            Error::Bracket(_) => ChqStatus::Bracket,
            Error::Infeasible(_) => ChqStatus::Infeasible,
            Error::Unsupported(_) => ChqStatus::Unsupported,
            Error::Convergence(_) => ChqStatus::Convergence,
            Error::Stagnation(_) => ChqStatus::Stagnation,
            Error::Consistency(_) => ChqStatus::Consistency,
            Error::Io { .. } => ChqStatus::Io,
        }
    }
}

/// Opaque radial grid.
pub struct ChqGrid(SharedGrid);

/// Opaque field on a grid.
pub struct ChqField(RadialField);

/// Opaque Riesz kernel matrix.
pub struct ChqKernel(KernelMatrix);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChqParams {
    pub n: u32,
    pub alpha: f64,
    pub q: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChqConstants {
    pub riesz_norm: f64,
    pub hls_sharp: f64,
    pub choquard_c0: f64,
    pub sobolev_s: f64,
    pub nehari_level_bound: f64,
    pub constraint_level_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChqBreakdown {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub i: f64,
    pub j: f64,
    pub h: f64,
    pub t: f64,
}

impl From<EnergyBreakdown> for ChqBreakdown {
    fn from(e: EnergyBreakdown) -> Self {
        Self {
            a: e.a,
            b: e.b,
            c: e.c,
            d: e.d,
            i: e.action_i,
            j: e.nehari_j,
            h: e.constraint_h,
            t: e.half_dirichlet_t,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChqLevelReport {
    pub level: f64,
    pub bound: f64,
    pub margin: f64,
    /// NaN when no ε was involved.
    pub eps_used: f64,
    pub iterations: usize,
    pub residual: f64,
    pub breakdown: ChqBreakdown,
    pub passed: bool,
}

impl From<&LevelReport> for ChqLevelReport {
    fn from(r: &LevelReport) -> Self {
        Self {
            level: r.level,
            bound: r.bound,
            margin: r.margin,
            eps_used: r.eps_used.unwrap_or(f64::NAN),
            iterations: r.iterations,
            residual: r.residual,
            breakdown: r.breakdown.into(),
            passed: r.passed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChqSolverOptions {
    pub max_iter: usize,
    pub tol_i: f64,
    pub tol_residual: f64,
    pub eta0: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ChqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChqStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            ChqStatus::from(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer passed for `{what}`"));
            ChqStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            ChqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn non_null<T>(p: *mut T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

fn params(p: ChqParams) -> Result<ProblemParams, Failure> {
    Ok(ProblemParams::new(p.n, p.alpha, p.q)?)
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn chq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must point to writable memory for one `ChqConstants`.
#[no_mangle]
pub unsafe extern "C" fn chq_constants(p: ChqParams, out: *mut ChqConstants) -> ChqStatus {
    guard(|| {
        non_null(out, "out")?;
        let r = ConstantsReport::compute(&params(p)?)?;
        *out = ChqConstants {
            riesz_norm: r.riesz_norm,
            hls_sharp: r.hls_sharp,
            choquard_c0: r.choquard_c0,
            sobolev_s: r.sobolev_s,
            nehari_level_bound: r.nehari_level_bound,
            constraint_level_bound: r.constraint_level_bound,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn chq_grid_new(
    n: u32,
    r_min: f64,
    r_max: f64,
    nodes: usize,
    out: *mut *mut ChqGrid,
) -> ChqStatus {
    guard(|| {
        non_null(out, "out")?;
        let g = RadialGrid::new(n, r_min, r_max, nodes)?.shared();
        *out = Box::into_raw(Box::new(ChqGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from `chq_grid_new` and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chq_grid_free(grid: *mut ChqGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes, or 0 for a null grid.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn chq_grid_len(grid: *const ChqGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Copies the node radii into `out`, which holds `len` doubles.
///
/// # Safety
/// `grid` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn chq_grid_nodes(grid: *const ChqGrid, out: *mut f64, len: usize) -> ChqStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        copy_out(g.0.nodes(), out, len)
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err(Error::Data(format!("buffer holds {len} values, need {}", src.len())).into());
    }
    non_null(out, "out")?;
    ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    Ok(())
}

/// # Safety
/// `grid` must be live, `values` valid for `len` reads, `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn chq_field_new(
    grid: *const ChqGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut ChqField,
) -> ChqStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        let v = slice(values, len, "values")?;
        non_null(out, "out")?;
        let f = RadialField::new(&g.0, v.to_vec())?;
        *out = Box::into_raw(Box::new(ChqField(f)));
        Ok(())
    })
}

/// Samples the bubble U_ε (σ = 0) or its N = 4 perturbation.
///
/// # Safety
/// `grid` must be live and `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn chq_field_bubble(
    grid: *const ChqGrid,
    eps: f64,
    sigma: f64,
    out: *mut *mut ChqField,
) -> ChqStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        non_null(out, "out")?;
        let spec = BubbleSpec::new(g.0.dim(), eps, sigma)?;
        *out = Box::into_raw(Box::new(ChqField(bubble(&g.0, &spec)?)));
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chq_field_free(field: *mut ChqField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn chq_field_len(field: *const ChqField) -> usize {
    field.as_ref().map_or(0, |f| f.0.len())
}

/// # Safety
/// `field` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn chq_field_values(field: *const ChqField, out: *mut f64, len: usize) -> ChqStatus {
    guard(|| {
        let f = deref(field, "field")?;
        copy_out(f.0.values(), out, len)
    })
}

/// # Safety
/// `grid` must be live and `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn chq_kernel_build(grid: *const ChqGrid, alpha: f64, out: *mut *mut ChqKernel) -> ChqStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(ChqKernel(KernelMatrix::build(&g.0, alpha)?)));
        Ok(())
    })
}

/// # Safety
/// `kernel` must come from `chq_kernel_build` and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chq_kernel_free(kernel: *mut ChqKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chq_energy_breakdown(
    field: *const ChqField,
    kernel: *const ChqKernel,
    p: ChqParams,
    out: *mut ChqBreakdown,
) -> ChqStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let k = deref(kernel, "kernel")?;
        non_null(out, "out")?;
        *out = energy_breakdown(&f.0, &k.0, &params(p)?)?.into();
        Ok(())
    })
}

/// Scales the field onto the Nehari manifold; writes t and a new handle.
///
/// # Safety
/// Handles must be live; `t` and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chq_nehari_project(
    field: *const ChqField,
    kernel: *const ChqKernel,
    p: ChqParams,
    t: *mut f64,
    out: *mut *mut ChqField,
) -> ChqStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let k = deref(kernel, "kernel")?;
        non_null(t, "t")?;
        non_null(out, "out")?;
        let (time, v) = nehari_project(&f.0, &k.0, &params(p)?)?;
        *t = time;
        *out = Box::into_raw(Box::new(ChqField(v)));
        Ok(())
    })
}

/// # Safety
/// `field` must be live and `out` a handle slot.
#[no_mangle]
pub unsafe extern "C" fn chq_schwarz_rearrange(field: *const ChqField, out: *mut *mut ChqField) -> ChqStatus {
    guard(|| {
        let f = deref(field, "field")?;
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(ChqField(schwarz_rearrange(&f.0)?)));
        Ok(())
    })
}

/// Bubble-ray bound on the Nehari level. `s_exponent` is used for N = 4;
/// pass NaN for the default.
///
/// # Safety
/// Handles must be live, `eps` valid for `eps_len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chq_verify_nehari_level(
    grid: *const ChqGrid,
    kernel: *const ChqKernel,
    p: ChqParams,
    eps: *const f64,
    eps_len: usize,
    s_exponent: f64,
    out: *mut ChqLevelReport,
) -> ChqStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        let k = deref(kernel, "kernel")?;
        let e = slice(eps, eps_len, "eps")?;
        non_null(out, "out")?;
        let s = (!s_exponent.is_nan()).then_some(s_exponent);
        let r = verify_nehari_level(&params(p)?, &g.0, &k.0, e, s)?;
        *out = ChqLevelReport::from(&r);
        Ok(())
    })
}

/// Normalized-bubble bound on the constraint level; arguments as for
/// `chq_verify_nehari_level`.
///
/// # Safety
/// Handles must be live, `eps` valid for `eps_len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn chq_verify_constraint_level(
    grid: *const ChqGrid,
    kernel: *const ChqKernel,
    p: ChqParams,
    eps: *const f64,
    eps_len: usize,
    s_exponent: f64,
    out: *mut ChqLevelReport,
) -> ChqStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        let k = deref(kernel, "kernel")?;
        let e = slice(eps, eps_len, "eps")?;
        non_null(out, "out")?;
        let s = (!s_exponent.is_nan()).then_some(s_exponent);
        let r = verify_constraint_level(&params(p)?, &g.0, &k.0, e, s)?;
        *out = ChqLevelReport::from(&r);
        Ok(())
    })
}

/// Default descent options.
#[no_mangle]
pub extern "C" fn chq_solver_options_default() -> ChqSolverOptions {
    let d = choquard::level::SolverOptions::default();
    ChqSolverOptions {
        max_iter: d.max_iter,
        tol_i: d.tol_i,
        tol_residual: d.tol_residual,
        eta0: d.eta0,
    }
}

/// Descent for the Nehari level from `start`; writes the minimizer handle and
/// the report.
///
/// # Safety
/// Handles must be live; `out` and `report` writable.
#[no_mangle]
pub unsafe extern "C" fn chq_minimize_nehari(
    kernel: *const ChqKernel,
    start: *const ChqField,
    p: ChqParams,
    opts: ChqSolverOptions,
    out: *mut *mut ChqField,
    report: *mut ChqLevelReport,
) -> ChqStatus {
    guard(|| {
        let k = deref(kernel, "kernel")?;
        let s = deref(start, "start")?;
        non_null(out, "out")?;
        non_null(report, "report")?;
        let o = choquard::level::SolverOptions {
            max_iter: opts.max_iter,
            tol_i: opts.tol_i,
            tol_residual: opts.tol_residual,
            eta0: opts.eta0,
        };
        let (u, r) = minimize_nehari(&params(p)?, &k.0, &s.0, &o)?;
        *report = ChqLevelReport::from(&r);
        *out = Box::into_raw(Box::new(ChqField(u)));
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn chq_subadditivity_gap(lambda: f64, n: u32, out: *mut f64) -> ChqStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = subadditivity_gap(lambda, n)?;
        Ok(())
    })
}
