//! C interface to the rqpd workbench.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! an [`RqpdStatus`]; the message of the last failure on the calling thread
//! is available from [`rqpd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rqpd_core::casebook::{self, Options};
use rqpd_core::coupling::{max_coupling_value, CouplingProblem};
use rqpd_core::judgment::{check_judgment, Judgment, Sampler, Status};
use rqpd_core::lang::{parse, Program};
use rqpd_core::linalg::{Matrix, C64};
use rqpd_core::semantics::run;
use rqpd_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RqpdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Dimension = 4,
    Invalid = 5,
    Numerical = 6,
    Unsupported = 7,
    Io = 8,
    Panic = 9,
}

/// Outcome of a sampled judgment check.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RqpdVerdict {
    Passed = 0,
    Falsified = 1,
    Inconclusive = 2,
}

/// A parsed program.
pub struct RqpdProgram(Program);

/// A complex matrix.
pub struct RqpdMatrix(Matrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code(e: &Error) -> RqpdStatus {
    match e {
        Error::Parse { .. } | Error::Program(_) => RqpdStatus::Parse,
        Error::Dimension(_) => RqpdStatus::Dimension,
        Error::Numerical(_) | Error::Divergence(_) | Error::Infeasible(_) => RqpdStatus::Numerical,
        Error::Unsupported(_) => RqpdStatus::Unsupported,
        Error::Io(_) => RqpdStatus::Io,
        _ => RqpdStatus::Invalid,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RqpdStatus>) -> RqpdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RqpdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            RqpdStatus::Panic
        }
    }
}

fn fail(e: Error) -> RqpdStatus {
    set_error(e.to_string());
    code(&e)
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, RqpdStatus> {
    if s.is_null() {
        set_error("null string".into());
        return Err(RqpdStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        RqpdStatus::InvalidUtf8
    })
}

unsafe fn obj<'a, T>(p: *const T) -> Result<&'a T, RqpdStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        RqpdStatus::NullPointer
    })
}

unsafe fn out<T>(p: *mut T, v: T) -> Result<(), RqpdStatus> {
    if p.is_null() {
        set_error("null output pointer".into());
        return Err(RqpdStatus::NullPointer);
    }
    p.write(v);
    Ok(())
}

/// Message of the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rqpd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses program source text.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out_program` writable.
#[no_mangle]
pub unsafe extern "C" fn rqpd_program_parse(src: *const c_char, out_program: *mut *mut RqpdProgram) -> RqpdStatus {
    guard(|| {
        let p = parse(str_arg(src)?).map_err(fail)?;
        out(out_program, Box::into_raw(Box::new(RqpdProgram(p))))
    })
}

/// # Safety
/// `p` must come from [`rqpd_program_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_program_free(p: *mut RqpdProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of the input space; zero for a null handle.
///
/// # Safety
/// `p` must be a live program handle or null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_program_input_dim(p: *const RqpdProgram) -> usize {
    p.as_ref().map_or(0, |p| p.0.input_dim())
}

/// # Safety
/// `p` must be a live program handle or null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_program_output_dim(p: *const RqpdProgram) -> usize {
    p.as_ref().map_or(0, |p| p.0.output_dim())
}

/// Builds a matrix from `2 * rows * cols` doubles, row-major, with real and
/// imaginary parts interleaved.
///
/// # Safety
/// `data` must point to `2 * rows * cols` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn rqpd_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out_matrix: *mut *mut RqpdMatrix,
) -> RqpdStatus {
    guard(|| {
        let n = rows.checked_mul(cols).ok_or(RqpdStatus::Dimension)?;
        if data.is_null() && n > 0 {
            set_error("null data".into());
            return Err(RqpdStatus::NullPointer);
        }
        let raw = if n == 0 { &[][..] } else { std::slice::from_raw_parts(data, 2 * n) };
        let entries = raw.chunks_exact(2).map(|z| C64::new(z[0], z[1])).collect();
        let m = Matrix::from_vec(rows, cols, entries).map_err(fail)?;
        out(out_matrix, Box::into_raw(Box::new(RqpdMatrix(m))))
    })
}

/// # Safety
/// `m` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_matrix_free(m: *mut RqpdMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live matrix handle or null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_matrix_rows(m: *const RqpdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be a live matrix handle or null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_matrix_cols(m: *const RqpdMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the entries into `buf` in the layout of [`rqpd_matrix_new`].
/// `len` is the number of doubles available.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rqpd_matrix_read(m: *const RqpdMatrix, buf: *mut f64, len: usize) -> RqpdStatus {
    guard(|| {
        let m = obj(m)?;
        let need = 2 * m.0.data().len();
        if len < need {
            set_error(format!("buffer holds {len} doubles, {need} needed"));
            return Err(RqpdStatus::Dimension);
        }
        if buf.is_null() {
            set_error("null buffer".into());
            return Err(RqpdStatus::NullPointer);
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (k, z) in m.0.data().iter().enumerate() {
            dst[2 * k] = z.re;
            dst[2 * k + 1] = z.im;
        }
        Ok(())
    })
}

/// Output state of a program on an input state.
///
/// # Safety
/// Handles must be live and `out_state` writable.
#[no_mangle]
pub unsafe extern "C" fn rqpd_run(
    p: *const RqpdProgram,
    rho: *const RqpdMatrix,
    out_state: *mut *mut RqpdMatrix,
) -> RqpdStatus {
    guard(|| {
        let m = run(&obj(p)?.0, &obj(rho)?.0).map_err(fail)?;
        out(out_state, Box::into_raw(Box::new(RqpdMatrix(m))))
    })
}

/// Samples `samples` inputs to test P₁ ∼ P₂ : A ⇒ B.
///
/// # Safety
/// Handles must be live and the output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn rqpd_check_judgment(
    p1: *const RqpdProgram,
    p2: *const RqpdProgram,
    pre: *const RqpdMatrix,
    post: *const RqpdMatrix,
    samples: usize,
    seed: u64,
    out_verdict: *mut RqpdVerdict,
    out_worst_margin: *mut f64,
) -> RqpdStatus {
    guard(|| {
        let j = Judgment::new(obj(p1)?.0.clone(), obj(p2)?.0.clone(), obj(pre)?.0.clone(), obj(post)?.0.clone());
        let v = check_judgment(&j, &Sampler::new(samples, seed)).map_err(fail)?;
        let verdict = match v.status {
            Status::Passed => RqpdVerdict::Passed,
            Status::Falsified => RqpdVerdict::Falsified,
            Status::Inconclusive => RqpdVerdict::Inconclusive,
        };
        out(out_verdict, verdict)?;
        if !out_worst_margin.is_null() {
            out_worst_margin.write(v.worst_margin);
        }
        Ok(())
    })
}

/// Largest tr(Bσ) over couplings σ of (ρ₁, ρ₂), optionally over PPT
/// couplings only.
///
/// # Safety
/// Handles must be live and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn rqpd_coupling_value(
    rho1: *const RqpdMatrix,
    rho2: *const RqpdMatrix,
    objective: *const RqpdMatrix,
    ppt: bool,
    out_value: *mut f64,
) -> RqpdStatus {
    guard(|| {
        let mut prob = CouplingProblem::new(obj(rho1)?.0.clone(), obj(rho2)?.0.clone(), obj(objective)?.0.clone());
        if ppt {
            prob = prob.with_ppt();
        }
        let sol = max_coupling_value(&prob).map_err(fail)?;
        out(out_value, sol.value)
    })
}

/// Runs a casebook scenario with default options and the given seed, and
/// hands back its JSON report. Free the string with [`rqpd_string_free`].
///
/// # Safety
/// `id` must be a NUL-terminated string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rqpd_casebook_run(id: *const c_char, seed: u64, out_json: *mut *mut c_char) -> RqpdStatus {
    guard(|| {
        let id = str_arg(id)?;
        let opts = Options { seed, ..Options::default() };
        let rep = casebook::run_scenario(id, &opts).map_err(fail)?;
        let json = rep.to_json().map_err(fail)?;
        out(out_json, CString::new(json).map_err(|_| RqpdStatus::Io)?.into_raw())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rqpd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
