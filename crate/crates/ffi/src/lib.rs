//! C ABI for sophlab.
//!
//! Bit strings cross the boundary as NUL-terminated `0`/`1` text; the empty
//! C string is ε. Every function returns an [`SlStatus`]; on failure
//! [`sl_last_error_message`] describes the error on the calling thread.
//! Tables are opaque handles released with [`sl_table_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sophlab::enumerate::{build_table_with, load_table, save_table, BuildOptions, ComplexityTable};
use sophlab::pvm::{eval, EvalOutcome};
use sophlab::stats::{sophistication, structure_lambda, StatsError, SufficiencyParams};
use sophlab::{Bits, Budgets, Program};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    /// Null pointer, malformed bit string or program, or invalid budgets.
    InvalidArgument = 1,
    /// The string has no entry in the table.
    UnknownString = 2,
    Io = 3,
    /// The snapshot is damaged or from another format version.
    Corrupt = 4,
    /// The enumeration would exceed its resource cap.
    ResourceExceeded = 5,
    /// The output buffer is too small; the required size was reported.
    BufferTooSmall = 6,
    /// The evaluation aborted; the message names the reason.
    Aborted = 7,
    Internal = 8,
}

/// Enumeration budgets.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlBudgets {
    pub max_pair_bits: u32,
    pub max_program_bits: u32,
    pub max_data_bits: u32,
    pub max_steps: u64,
    pub max_string_len: u32,
}

impl From<SlBudgets> for Budgets {
    fn from(b: SlBudgets) -> Budgets {
        Budgets {
            max_pair_bits: b.max_pair_bits,
            max_program_bits: b.max_program_bits,
            max_data_bits: b.max_data_bits,
            max_steps: b.max_steps,
            max_string_len: b.max_string_len,
        }
    }
}

/// Opaque complexity table.
pub struct SlTable {
    inner: ComplexityTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("no interior NUL"));
}

type Res<T> = Result<T, (SlStatus, String)>;

fn guard(f: impl FnOnce() -> Res<()>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlStatus::Internal
        }
    }
}

fn invalid(msg: impl Into<String>) -> (SlStatus, String) {
    (SlStatus::InvalidArgument, msg.into())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn bits_arg(p: *const c_char, what: &str) -> Res<Bits> {
    text(p, what)?
        .parse()
        .map_err(|e: sophlab::bits::ParseBitsError| invalid(e.to_string()))
}

unsafe fn table<'a>(t: *const SlTable) -> Res<&'a ComplexityTable> {
    t.as_ref().map(|t| &t.inner).ok_or_else(|| invalid("table is null"))
}

fn budgets_arg(b: *const SlBudgets) -> Res<Budgets> {
    let b: Budgets = unsafe { b.as_ref() }
        .copied()
        .ok_or_else(|| invalid("budgets is null"))?
        .into();
    b.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(b)
}

fn out<T>(p: *mut T, v: T, what: &str) -> Res<()> {
    if p.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    unsafe { p.write(v) };
    Ok(())
}

/// Copies `s` plus a NUL into `buf`; `needed` (if non-null) receives `len(s) + 1`.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Res<()> {
    if !needed.is_null() {
        needed.write(s.len() + 1);
    }
    if buf.is_null() || cap < s.len() + 1 {
        return Err((SlStatus::BufferTooSmall, format!("need {} bytes", s.len() + 1)));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    buf.add(s.len()).write(0);
    Ok(())
}

fn stats_err(e: StatsError) -> (SlStatus, String) {
    match e {
        StatsError::UnknownString(_) => (SlStatus::UnknownString, e.to_string()),
        _ => (SlStatus::Internal, e.to_string()),
    }
}

fn snapshot_err(e: sophlab::enumerate::SnapshotError) -> (SlStatus, String) {
    use sophlab::enumerate::SnapshotError::*;
    match e {
        Io(_) => (SlStatus::Io, e.to_string()),
        _ => (SlStatus::Corrupt, e.to_string()),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the last failed call on this thread (empty after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Budgets with program and data caps equal to `pair_bits` and default limits.
#[no_mangle]
pub extern "C" fn sl_budgets_default(pair_bits: u32) -> SlBudgets {
    let b = Budgets::with_pair_bits(pair_bits);
    SlBudgets {
        max_pair_bits: b.max_pair_bits,
        max_program_bits: b.max_program_bits,
        max_data_bits: b.max_data_bits,
        max_steps: b.max_steps,
        max_string_len: b.max_string_len,
    }
}

/// Builds the unconditional table. `workers` of 0 means one per CPU.
///
/// # Safety
/// `budgets` must be null or point to an `SlBudgets`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_table_build(
    budgets: *const SlBudgets,
    workers: u32,
    out_table: *mut *mut SlTable,
) -> SlStatus {
    guard(|| {
        let b = budgets_arg(budgets)?;
        if out_table.is_null() {
            return Err(invalid("out_table is null"));
        }
        let opts = if workers == 0 {
            BuildOptions::default()
        } else {
            BuildOptions::with_workers(workers as usize)
        };
        let t = build_table_with(&b, &Bits::new(), opts).map_err(|e| match e {
            sophlab::enumerate::EnumerateError::ResourceExceeded { .. } => (SlStatus::ResourceExceeded, e.to_string()),
            _ => invalid(e.to_string()),
        })?;
        out(out_table, Box::into_raw(Box::new(SlTable { inner: t })), "out_table")
    })
}

/// Loads a snapshot file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out_table` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_table_load(path: *const c_char, out_table: *mut *mut SlTable) -> SlStatus {
    guard(|| {
        let p = text(path, "path")?;
        if out_table.is_null() {
            return Err(invalid("out_table is null"));
        }
        let t = load_table(Path::new(p)).map_err(snapshot_err)?;
        out(out_table, Box::into_raw(Box::new(SlTable { inner: t })), "out_table")
    })
}

/// Writes a snapshot; `digest_out` (32 bytes, may be null) receives its digest.
///
/// # Safety
/// `t` must come from this library; `path` must be NUL-terminated; `digest_out`
/// must be null or point to 32 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_table_save(t: *const SlTable, path: *const c_char, digest_out: *mut u8) -> SlStatus {
    guard(|| {
        let t = table(t)?;
        let p = text(path, "path")?;
        let digest = save_table(t, Path::new(p)).map_err(snapshot_err)?;
        if !digest_out.is_null() {
            ptr::copy_nonoverlapping(digest.as_ptr(), digest_out, 32);
        }
        Ok(())
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_table_free(t: *mut SlTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of entries; 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_table_len(t: *const SlTable) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// Bounded complexity of `x`.
///
/// # Safety
/// Pointers must be null or valid; `x` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_table_k(t: *const SlTable, x: *const c_char, k_out: *mut u32) -> SlStatus {
    guard(|| {
        let t = table(t)?;
        let x = bits_arg(x, "x")?;
        let e = t
            .get(&x)
            .ok_or_else(|| stats_err(StatsError::UnknownString(x.clone())))?;
        out(k_out, e.k, "k_out")
    })
}

/// Exact Kraft sum of the table's halting pairs as `p/q` text.
///
/// # Safety
/// `buf` must be null or hold `cap` bytes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_table_kraft_sum(
    t: *const SlTable,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> SlStatus {
    guard(|| write_str(&table(t)?.kraft_sum().to_string(), buf, cap, needed))
}

/// Sophistication of `x` at slack `c`; `k_out` may be null.
///
/// # Safety
/// Pointers must be null or valid; `x` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sl_sophistication(
    t: *const SlTable,
    x: *const c_char,
    c: u32,
    soph_out: *mut u32,
    k_out: *mut u32,
) -> SlStatus {
    guard(|| {
        let t = table(t)?;
        let x = bits_arg(x, "x")?;
        let r = sophistication(t, &x, SufficiencyParams::new(c)).map_err(stats_err)?;
        if !k_out.is_null() {
            k_out.write(r.k);
        }
        out(soph_out, r.soph, "soph_out")
    })
}

/// `λ_x(α)` for `α = 0, 1, ...` into `lambda_out`, with -1 where no pair fits.
/// `len_out` receives the number of samples, which is written only if it fits in `cap`.
///
/// # Safety
/// `lambda_out` must be null or hold `cap` values; other pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_structure_lambda(
    t: *const SlTable,
    x: *const c_char,
    lambda_out: *mut i64,
    cap: usize,
    len_out: *mut usize,
) -> SlStatus {
    guard(|| {
        let t = table(t)?;
        let x = bits_arg(x, "x")?;
        let pts = structure_lambda(t, &x).map_err(stats_err)?;
        out(len_out, pts.len(), "len_out")?;
        if lambda_out.is_null() || cap < pts.len() {
            return Err((SlStatus::BufferTooSmall, format!("need {} values", pts.len())));
        }
        for (i, p) in pts.iter().enumerate() {
            lambda_out.add(i).write(p.lambda.map_or(-1, |l| l as i64));
        }
        Ok(())
    })
}

/// Runs `program` (bits or mnemonics) on `data` with auxiliary tape `aux`.
/// The output is written like [`sl_table_kraft_sum`]; `steps_out` may be null.
///
/// # Safety
/// String arguments must be NUL-terminated; buffers as in [`sl_table_kraft_sum`].
#[no_mangle]
pub unsafe extern "C" fn sl_eval(
    program: *const c_char,
    data: *const c_char,
    aux: *const c_char,
    budgets: *const SlBudgets,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
    steps_out: *mut u64,
) -> SlStatus {
    guard(|| {
        let p = Program::parse(text(program, "program")?).map_err(invalid)?;
        let (d, a) = (bits_arg(data, "data")?, bits_arg(aux, "aux")?);
        let b = budgets_arg(budgets)?;
        match eval(&p, &d, &a, &b) {
            EvalOutcome::Ok { output, steps, .. } => {
                if !steps_out.is_null() {
                    steps_out.write(steps);
                }
                write_str(&output.to_string(), buf, cap, needed)
            }
            EvalOutcome::Abort(r) => Err((SlStatus::Aborted, format!("{r:?}"))),
        }
    })
}
