//! C ABI for `tvdeconv`.
//!
//! Images, kernels and traces cross the boundary as opaque heap handles that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns a [`TvdStatus`]; on failure a message is stored per thread and
//! can be fetched with [`tvd_last_error_message`]. Outputs are written through
//! out-pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use tvdeconv::harness::{degrade, phantom, read_image, trace_csv, write_pgm16, PhantomKind};
use tvdeconv::solvers::{default_beta_schedule, SolverConfig, SolverKind};
use tvdeconv::{best_iterate, build_cache, decompose, make_kernel, snr_db, BestBy, TvError, TvVariant};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    KernelTooLarge = 4,
    SingularSystem = 5,
    NoConvergence = 6,
    MissingScores = 7,
    DegenerateReference = 8,
    Io = 9,
    Format = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvdKernelKind {
    Average = 0,
    Gaussian = 1,
    Delta = 2,
}

/// Blur kernel description; `size` is ignored for `Delta`, `sigma` unless `Gaussian`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvdKernelSpec {
    pub kind: TvdKernelKind,
    pub size: usize,
    pub sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvdSolver {
    /// Quadratic penalty with β continuation.
    Ftvd3 = 0,
    /// Augmented Lagrangian with fixed β.
    Ftvd4 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvdVariant {
    Isotropic = 0,
    Anisotropic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvdPhantom {
    Composite = 0,
    Blocks = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvdBestBy {
    Snr = 0,
    ObjectiveTv = 1,
}

/// Solver parameters. `beta_schedule` may be NULL (with length 0) to use
/// `1, 2, 4, ..., 1024`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvdSolverConfig {
    pub mu: f64,
    pub tv_variant: TvdVariant,
    pub tol: f64,
    pub max_inner_iters: usize,
    pub beta_schedule: *const f64,
    pub beta_schedule_len: usize,
    pub beta_fixed: f64,
    pub max_multiplier_updates: usize,
    pub record_inner: bool,
}

/// Scalar fields of one trace record.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TvdRecordInfo {
    pub stage_index: usize,
    pub inner_iter: usize,
    pub beta: f64,
    pub has_snr: bool,
    pub snr_db: f64,
    pub objective_tv: f64,
    pub penalty_objective: f64,
    pub constraint_residual: f64,
    pub rel_change: f64,
    pub stage_end: bool,
}

/// Opaque square image.
pub struct TvdImage(tvdeconv::Image);

/// Opaque blur kernel.
pub struct TvdKernel(tvdeconv::Kernel);

/// Opaque solver trace.
pub struct TvdTrace(tvdeconv::IterateTrace);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &TvError) -> TvdStatus {
    match err {
        TvError::InvalidImage(_) | TvError::BadSpec(_) | TvError::NonpositiveThreshold(_) | TvError::InvalidConfig(_) => {
            TvdStatus::InvalidArgument
        }
        TvError::ShapeMismatch { .. } => TvdStatus::ShapeMismatch,
        TvError::KernelTooLarge { .. } => TvdStatus::KernelTooLarge,
        TvError::SingularSystem { .. } => TvdStatus::SingularSystem,
        TvError::NoConvergence { .. } => TvdStatus::NoConvergence,
        TvError::MissingScores(_) => TvdStatus::MissingScores,
        TvError::DegenerateReference => TvdStatus::DegenerateReference,
        TvError::TooLarge { .. } => TvdStatus::OutOfRange,
        TvError::Io { .. } => TvdStatus::Io,
        TvError::Format { .. } => TvdStatus::Format,
    }
}

struct Failure(TvdStatus, String);

impl From<TvError> for Failure {
    fn from(e: TvError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TvdStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TvdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            TvdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TvdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(TvdStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length excluding NUL.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tvd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates an `n x n` image from `len = n*n` row-major samples.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_image_new(n: usize, data: *const f64, len: usize, out: *mut *mut TvdImage) -> TvdStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let samples = std::slice::from_raw_parts(data, len).to_vec();
        put(out, TvdImage(tvdeconv::Image::new(n, samples)?))
    })
}

/// Releases an image; NULL is ignored.
///
/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvd_image_free(image: *mut TvdImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_image_size(image: *const TvdImage, out: *mut usize) -> TvdStatus {
    guard(|| {
        let img = deref(image, "image")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = img.0.size();
        Ok(())
    })
}

/// Copies the `n*n` row-major samples into `buf`, which must hold `len >= n*n` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tvd_image_copy_data(image: *const TvdImage, buf: *mut f64, len: usize) -> TvdStatus {
    guard(|| {
        let img = deref(image, "image")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let data = img.0.data();
        if len < data.len() {
            return Err(Failure(
                TvdStatus::OutOfRange,
                format!("buffer holds {len} values, image has {}", data.len()),
            ));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Loads a PGM or PNG, normalized to `[0, 1]`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_image_load(path: *const c_char, out: *mut *mut TvdImage) -> TvdStatus {
    guard(|| {
        let p = path_arg(path)?;
        put(out, TvdImage(read_image(&p)?))
    })
}

/// Writes a 16-bit binary PGM (values clamped to `[0, 1]`).
///
/// # Safety
/// `image` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tvd_image_save_pgm(image: *const TvdImage, path: *const c_char) -> TvdStatus {
    guard(|| {
        let img = deref(image, "image")?;
        write_pgm16(&path_arg(path)?, &img.0)?;
        Ok(())
    })
}

/// Synthetic ground truth of side `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_phantom(kind: TvdPhantom, n: usize, out: *mut *mut TvdImage) -> TvdStatus {
    guard(|| {
        if n < 2 {
            return Err(Failure(TvdStatus::InvalidArgument, format!("side {n} < 2")));
        }
        let kind = match kind {
            TvdPhantom::Composite => PhantomKind::Composite,
            TvdPhantom::Blocks => PhantomKind::Blocks,
        };
        put(out, TvdImage(phantom(kind, n)))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_kernel_new(spec: TvdKernelSpec, out: *mut *mut TvdKernel) -> TvdStatus {
    guard(|| {
        let spec = match spec.kind {
            TvdKernelKind::Average => tvdeconv::KernelSpec::Average(spec.size),
            TvdKernelKind::Gaussian => tvdeconv::KernelSpec::Gaussian { size: spec.size, sigma: spec.sigma },
            TvdKernelKind::Delta => tvdeconv::KernelSpec::Delta,
        };
        put(out, TvdKernel(make_kernel(spec)?))
    })
}

/// # Safety
/// `kernel` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvd_kernel_free(kernel: *mut TvdKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// `f = K u0 + noise`, with noise deterministic in `seed`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_degrade(
    u0: *const TvdImage,
    kernel: *const TvdKernel,
    sigma: f64,
    seed: u64,
    out: *mut *mut TvdImage,
) -> TvdStatus {
    guard(|| {
        let u0 = deref(u0, "image")?;
        let k = deref(kernel, "kernel")?;
        put(out, TvdImage(degrade(&u0.0, &k.0, sigma, seed)?))
    })
}

/// Default parameters: `mu = 500`, isotropic, `tol = 1e-4`, 100 inner
/// iterations, default β schedule, `beta_fixed = 10`, 500 multiplier updates.
#[no_mangle]
pub extern "C" fn tvd_solver_config_default() -> TvdSolverConfig {
    let d = SolverConfig::default();
    TvdSolverConfig {
        mu: d.mu,
        tv_variant: TvdVariant::Isotropic,
        tol: d.tol,
        max_inner_iters: d.max_inner_iters,
        beta_schedule: ptr::null(),
        beta_schedule_len: 0,
        beta_fixed: d.beta_fixed,
        max_multiplier_updates: d.max_multiplier_updates,
        record_inner: d.record_inner,
    }
}

unsafe fn solver_config(c: &TvdSolverConfig) -> Result<SolverConfig, Failure> {
    let beta_schedule = if c.beta_schedule.is_null() {
        if c.beta_schedule_len != 0 {
            return Err(null("beta_schedule"));
        }
        default_beta_schedule()
    } else {
        std::slice::from_raw_parts(c.beta_schedule, c.beta_schedule_len).to_vec()
    };
    Ok(SolverConfig {
        mu: c.mu,
        tv_variant: match c.tv_variant {
            TvdVariant::Isotropic => TvVariant::Isotropic,
            TvdVariant::Anisotropic => TvVariant::Anisotropic,
        },
        tol: c.tol,
        max_inner_iters: c.max_inner_iters,
        beta_schedule,
        beta_fixed: c.beta_fixed,
        max_multiplier_updates: c.max_multiplier_updates,
        record_inner: c.record_inner,
        keep_multipliers: false,
    })
}

/// Runs a solver on observation `f`. `ground_truth` may be NULL; when given,
/// every record carries an SNR.
///
/// # Safety
/// Handles must be live; `config` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_solve(
    solver: TvdSolver,
    f: *const TvdImage,
    kernel: *const TvdKernel,
    config: *const TvdSolverConfig,
    ground_truth: *const TvdImage,
    out: *mut *mut TvdTrace,
) -> TvdStatus {
    guard(|| {
        let f = deref(f, "observation")?;
        let k = deref(kernel, "kernel")?;
        let cfg = solver_config(deref(config, "config")?)?;
        let gt = ground_truth.as_ref().map(|g| &g.0);
        let kind = match solver {
            TvdSolver::Ftvd3 => SolverKind::PenaltyContinuation,
            TvdSolver::Ftvd4 => SolverKind::AugmentedLagrangian,
        };
        put(out, TvdTrace(tvdeconv::solve(kind, &f.0, &k.0, &cfg, gt)?))
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_free(trace: *mut TvdTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of records.
///
/// # Safety
/// `trace` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_len(trace: *const TvdTrace, out: *mut usize) -> TvdStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = t.0.records.len();
        Ok(())
    })
}

/// # Safety
/// `trace` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_converged(trace: *const TvdTrace, out: *mut bool) -> TvdStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = t.0.converged;
        Ok(())
    })
}

fn record(t: &TvdTrace, index: usize) -> Result<&tvdeconv::IterateRecord, Failure> {
    t.0.records.get(index).ok_or_else(|| {
        Failure(
            TvdStatus::OutOfRange,
            format!("record {index} out of range (trace has {})", t.0.records.len()),
        )
    })
}

/// # Safety
/// `trace` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_record(trace: *const TvdTrace, index: usize, out: *mut TvdRecordInfo) -> TvdStatus {
    guard(|| {
        let r = record(deref(trace, "trace")?, index)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = TvdRecordInfo {
            stage_index: r.stage_index,
            inner_iter: r.inner_iter,
            beta: r.beta,
            has_snr: r.snr_db.is_some(),
            snr_db: r.snr_db.unwrap_or(f64::NAN),
            objective_tv: r.objective_tv,
            penalty_objective: r.penalty_objective,
            constraint_residual: r.constraint_residual,
            rel_change: r.rel_change,
            stage_end: r.stage_end,
        };
        Ok(())
    })
}

/// Copy of the iterate `u` of record `index`.
///
/// # Safety
/// `trace` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_iterate(trace: *const TvdTrace, index: usize, out: *mut *mut TvdImage) -> TvdStatus {
    guard(|| {
        let r = record(deref(trace, "trace")?, index)?;
        put(out, TvdImage(r.u.clone()))
    })
}

/// Index of the best record (earliest on ties).
///
/// # Safety
/// `trace` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_best(trace: *const TvdTrace, criterion: TvdBestBy, out: *mut usize) -> TvdStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let by = match criterion {
            TvdBestBy::Snr => BestBy::Snr,
            TvdBestBy::ObjectiveTv => BestBy::ObjectiveTv,
        };
        *out = best_iterate(&t.0, by)?;
        Ok(())
    })
}

/// Splits record `index` into `u1` (zero-mean potential of `w`) and
/// `u2 = u - u1`. `residual` (may be NULL) receives `max |w - D u1|`.
///
/// # Safety
/// Handles live; `kernel` must be the one the trace was solved with (only its
/// size matters); `u1`, `u2` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_decompose(
    trace: *const TvdTrace,
    kernel: *const TvdKernel,
    index: usize,
    u1: *mut *mut TvdImage,
    u2: *mut *mut TvdImage,
    residual: *mut f64,
) -> TvdStatus {
    guard(|| {
        let r = record(deref(trace, "trace")?, index)?;
        let k = deref(kernel, "kernel")?;
        if u1.is_null() || u2.is_null() {
            return Err(null("output pointer"));
        }
        let cache = build_cache(&k.0, r.u.size())?;
        let parts = decompose(&r.u, &r.w, &cache)?;
        if !residual.is_null() {
            *residual = parts.integrability_residual;
        }
        put(u1, TvdImage(parts.u1))?;
        put(u2, TvdImage(parts.u2))
    })
}

/// Writes the trace in the `trace.csv` format.
///
/// # Safety
/// `trace` live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tvd_trace_write_csv(trace: *const TvdTrace, path: *const c_char) -> TvdStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let p = path_arg(path)?;
        std::fs::write(&p, trace_csv(&t.0))
            .map_err(|e| Failure(TvdStatus::Io, format!("writing {}: {e}", p.display())))
    })
}

/// # Safety
/// Handles live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvd_snr_db(u: *const TvdImage, reference: *const TvdImage, out: *mut f64) -> TvdStatus {
    guard(|| {
        let u = deref(u, "image")?;
        let r = deref(reference, "reference")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = snr_db(&u.0, &r.0)?;
        Ok(())
    })
}
