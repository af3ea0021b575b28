//! C ABI for `pencil-restore`.
//!
//! Systems and restoration results live behind opaque handles that the
//! caller releases with the matching `pr_*_free` function. Every fallible
//! call returns a [`PrStatus`]; on failure [`pr_last_error`] describes what
//! went wrong on the calling thread. Strings handed out by the library are
//! released with [`pr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pencil_restore::cli::{passivity_report, restore_report, RestoreReport};
use pencil_restore::io::{to_json_string, SystemFile};
use pencil_restore::pencil::random_structured_perturbation;
use pencil_restore::restore::RestorationOptions;
use pencil_restore::stability::{stability_radius, Frequency, StabilityOptions};
use pencil_restore::systems::{random_strictly_passive, DescriptorSystem, GeneratorOptions};
use pencil_restore::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Numerical = 4,
    NonConvergence = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque descriptor system, optionally with its port-Hamiltonian form.
pub struct PrSystem {
    file: SystemFile,
    descriptor: DescriptorSystem,
}

/// Opaque result of a restoration run.
pub struct PrRestoration {
    report: RestoreReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> PrStatus {
    match err {
        Error::NonConvergence { .. } => PrStatus::NonConvergence,
        Error::Json(_) | Error::Format(_) | Error::Csv(_) | Error::Io(_) => PrStatus::Parse,
        e if e.is_numerical() => PrStatus::Numerical,
        _ => PrStatus::InvalidArgument,
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), (PrStatus, String)>) -> PrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PrStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {msg}"));
            PrStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PrStatus, String) {
    (PrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PrStatus, String)> {
    // SAFETY: the caller guarantees `p` is null or a live handle of type T.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (PrStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, by contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, (PrStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (PrStatus::InvalidArgument, "string contains a NUL byte".into()))
}

fn make_system(file: SystemFile) -> Result<*mut PrSystem, (PrStatus, String)> {
    let descriptor = file.descriptor().map_err(lib_err)?;
    Ok(Box::into_raw(Box::new(PrSystem { file, descriptor })))
}

/// Last error message on this thread, or null. The pointer stays valid
/// until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn pr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pr_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Seeded strictly passive port-Hamiltonian system with default generator options.
///
/// # Safety
/// `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_system_generate(n: usize, m: usize, seed: u64, out: *mut *mut PrSystem) -> PrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ph = random_strictly_passive(n, m, seed, &GeneratorOptions::default()).map_err(lib_err)?;
        let handle = make_system(SystemFile::from_ph(&ph, Some(seed)))?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, handle, "out") }
    })
}

/// Parses a system file (JSON text).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_system_from_json(json: *const c_char, out: *mut *mut PrSystem) -> PrStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null, NUL-terminated by contract.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| (PrStatus::Parse, "input is not UTF-8".to_string()))?;
        let file: SystemFile = serde_json::from_str(text).map_err(|e| lib_err(e.into()))?;
        let handle = make_system(file)?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, handle, "out") }
    })
}

/// Serializes a system to JSON; release the result with [`pr_string_free`].
///
/// # Safety
/// `sys` must be a live handle; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_system_to_json(sys: *const PrSystem, out: *mut *mut c_char) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let sys = unsafe { borrow(sys, "sys") }?;
        let text = into_c_string(to_json_string(&sys.file).map_err(lib_err)?)?;
        // SAFETY: by contract.
        unsafe { write_out(out, text, "out") }.inspect_err(|_| unsafe { pr_string_free(text) })
    })
}

/// State dimension `n` and port dimension `m`.
///
/// # Safety
/// `sys` must be a live handle; `n` and `m` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pr_system_dims(sys: *const PrSystem, n: *mut usize, m: *mut usize) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let sys = unsafe { borrow(sys, "sys") }?;
        if n.is_null() || m.is_null() {
            return Err(null("n or m"));
        }
        // SAFETY: checked non-null, valid by contract.
        unsafe {
            n.write(sys.descriptor.order());
            m.write(sys.descriptor.ports());
        }
        Ok(())
    })
}

/// Releases a system handle.
///
/// # Safety
/// `sys` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pr_system_free(sys: *mut PrSystem) {
    if !sys.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// Stability radius `ρ` of `(E, A)` and the minimizing frequency; when the
/// minimum is attained at infinity `*omega_infinite` is set and `*omega` is
/// infinite.
///
/// # Safety
/// `sys` must be a live handle; the output pointers must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pr_stability_radius(
    sys: *const PrSystem,
    rho: *mut f64,
    omega: *mut f64,
    omega_infinite: *mut bool,
) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let sys = unsafe { borrow(sys, "sys") }?;
        if rho.is_null() || omega.is_null() || omega_infinite.is_null() {
            return Err(null("output pointer"));
        }
        let r =
            stability_radius(&sys.descriptor.e, &sys.descriptor.a, &StabilityOptions::default()).map_err(lib_err)?;
        let (w, inf) = match r.omega_star {
            Frequency::Finite(w) => (w, false),
            Frequency::Infinite => (f64::INFINITY, true),
        };
        // SAFETY: checked non-null, valid by contract.
        unsafe {
            rho.write(r.rho);
            omega.write(w);
            omega_infinite.write(inf);
        }
        Ok(())
    })
}

/// Passivity checks of the system's even pencil and state pencil; the full
/// report is returned as JSON when `report_json` is non-null (release it
/// with [`pr_string_free`]).
///
/// # Safety
/// `sys` must be a live handle; `passed` must be valid for writing;
/// `report_json` must be null or valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_check_passivity(
    sys: *const PrSystem,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let sys = unsafe { borrow(sys, "sys") }?;
        let report = passivity_report(&sys.descriptor).map_err(lib_err)?;
        // SAFETY: by contract.
        unsafe { write_out(passed, report.passed, "passed") }?;
        if !report_json.is_null() {
            let text = into_c_string(to_json_string(&report).map_err(lib_err)?)?;
            // SAFETY: checked non-null, valid by contract.
            unsafe { report_json.write(text) };
        }
        Ok(())
    })
}

/// Applies a seeded random structured perturbation of norm `delta` to the
/// system's even pencil and restores its structure.
///
/// # Safety
/// `sys` must be a live handle; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_restore(
    sys: *const PrSystem,
    delta: f64,
    seed: u64,
    out: *mut *mut PrRestoration,
) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let sys = unsafe { borrow(sys, "sys") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = &sys.descriptor;
        let pert = random_structured_perturbation(d.order(), d.ports(), delta, seed).map_err(lib_err)?;
        let report =
            restore_report(d, &pert, Some(seed), Some(delta), &RestorationOptions::default()).map_err(lib_err)?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, Box::into_raw(Box::new(PrRestoration { report })), "out") }
    })
}

/// Number of fixed-point iterations used.
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pr_restoration_iterations(r: *const PrRestoration, out: *mut usize) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let r = unsafe { borrow(r, "restoration") }?;
        // SAFETY: by contract.
        unsafe { write_out(out, r.report.iterations, "out") }
    })
}

/// Copies the residual history `δ₀, δ₁, …` into `buf`. `*len` receives the
/// full length; `BufferTooSmall` is returned (and nothing copied) when
/// `capacity` is insufficient.
///
/// # Safety
/// `r` must be a live handle; `buf` must be valid for `capacity` writes (or
/// null when `capacity` is 0); `len` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pr_restoration_residual_history(
    r: *const PrRestoration,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let r = unsafe { borrow(r, "restoration") }?;
        let h = &r.report.residual_history;
        // SAFETY: by contract.
        unsafe { write_out(len, h.len(), "len") }?;
        if capacity < h.len() {
            return Err((PrStatus::BufferTooSmall, format!("need room for {} values", h.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        // SAFETY: `buf` holds at least `h.len()` elements by the check above.
        unsafe { ptr::copy_nonoverlapping(h.as_ptr(), buf, h.len()) };
        Ok(())
    })
}

/// `‖(Y₂₁, Y₁₂)‖_F` and the backward errors in descriptor
/// `‖(ΔE, ΔA, ΔB, ΔC, ΔD)‖_F` and port-Hamiltonian `‖(ΔR, ΔJ, ΔG, ΔP)‖_F`
/// coordinates. Any output pointer may be null.
///
/// # Safety
/// `r` must be a live handle; non-null outputs must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn pr_restoration_norms(
    r: *const PrRestoration,
    y_norm: *mut f64,
    descriptor_error: *mut f64,
    ph_error: *mut f64,
) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let r = unsafe { borrow(r, "restoration") }?;
        for (p, v) in [
            (y_norm, r.report.y_norm),
            (descriptor_error, r.report.backward_errors_descriptor.norm),
            (ph_error, r.report.backward_errors_ph.norm),
        ] {
            if !p.is_null() {
                // SAFETY: non-null outputs are valid by contract.
                unsafe { p.write(v) };
            }
        }
        Ok(())
    })
}

/// The restored descriptor system as a new handle.
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_restoration_restored_system(r: *const PrRestoration, out: *mut *mut PrSystem) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let r = unsafe { borrow(r, "restoration") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sys = r.report.restored.to_system().map_err(lib_err)?;
        let handle = make_system(SystemFile::from_descriptor(&sys, r.report.seed))?;
        // SAFETY: checked non-null above.
        unsafe { write_out(out, handle, "out") }
    })
}

/// Full restoration report as JSON; release it with [`pr_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn pr_restoration_to_json(r: *const PrRestoration, out: *mut *mut c_char) -> PrStatus {
    guard(|| {
        // SAFETY: by contract.
        let r = unsafe { borrow(r, "restoration") }?;
        let text = into_c_string(to_json_string(&r.report).map_err(lib_err)?)?;
        // SAFETY: by contract.
        unsafe { write_out(out, text, "out") }.inspect_err(|_| unsafe { pr_string_free(text) })
    })
}

/// Releases a restoration handle.
///
/// # Safety
/// `r` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pr_restoration_free(r: *mut PrRestoration) {
    if !r.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(r) });
    }
}
