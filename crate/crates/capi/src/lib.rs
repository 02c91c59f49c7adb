//! C interface to the synthesis toolkit.
//!
//! Everything here is callable from plain C: circuits travel as UTF-8,
//! NUL-terminated `aag` text, results come back through out-pointers, and
//! every entry point returns an [`AigsynthRc`]. A parsed circuit lives
//! behind the opaque [`AigsynthInstance`] handle until
//! [`aigsynth_instance_free`] releases it; strings handed out by the
//! library go back through [`aigsynth_string_free`]. The matching header
//! is generated into `include/aigsynth.h` at build time.
//!
//! Handles are immutable after creation, so sharing one across threads
//! for concurrent solves is fine; each call builds its own solver state.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use aigsynth::aiger::{parse_aag, split_inputs, write_aag, AigFile, CircuitSpec};
use aigsynth::cli::{gen_cnt, solve_spec, synthesize, Algo, SynthOutcome};
use aigsynth::game::Status;

/// Return code of every entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AigsynthRc {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The circuit text did not parse or failed validation.
    ParseError = 3,
    /// A numeric argument was out of range.
    InvalidArgument = 4,
    /// Synthesis produced no controller; the status out-value says why.
    Unfinished = 5,
    /// Internal failure; treat every out-value as unspecified.
    Internal = 6,
}

/// Solver verdict, reported through an out-parameter.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AigsynthStatus {
    /// The controller player can keep the circuit safe forever.
    Realizable = 0,
    /// The environment can force the error output.
    Unrealizable = 1,
    /// The time budget ran out before a verdict.
    Timeout = 2,
    /// The node budget ran out before a verdict.
    NodeLimit = 3,
}

/// Solver variant selector, mirroring the command-line `--algo` flag.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AigsynthAlgo {
    /// Concrete fixpoint over a monolithic transition relation.
    C = 0,
    /// Concrete fixpoint via transition-function substitution.
    Ctl = 1,
    /// Abstraction refinement over a monolithic abstract relation.
    A = 2,
    /// Abstraction refinement with partitioned operators.
    Atl = 3,
}

/// A parsed and validated synthesis instance. Opaque to C callers.
pub struct AigsynthInstance {
    file: AigFile,
    spec: CircuitSpec,
}

impl From<Status> for AigsynthStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Realizable => AigsynthStatus::Realizable,
            Status::Unrealizable => AigsynthStatus::Unrealizable,
            Status::Timeout => AigsynthStatus::Timeout,
            Status::NodeLimit => AigsynthStatus::NodeLimit,
        }
    }
}

impl From<AigsynthAlgo> for Algo {
    fn from(a: AigsynthAlgo) -> Self {
        match a {
            AigsynthAlgo::C => Algo::C,
            AigsynthAlgo::Ctl => Algo::Ctl,
            AigsynthAlgo::A => Algo::A,
            AigsynthAlgo::Atl => Algo::Atl,
        }
    }
}

/// Runs `body` with panics converted into a return code so unwinding
/// never crosses the language boundary.
fn guarded(body: impl FnOnce() -> AigsynthRc) -> AigsynthRc {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(AigsynthRc::Internal)
}

/// Borrows a required, NUL-terminated UTF-8 argument.
unsafe fn text_arg<'a>(ptr: *const c_char) -> Result<&'a str, AigsynthRc> {
    if ptr.is_null() {
        return Err(AigsynthRc::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| AigsynthRc::InvalidUtf8)
}

/// Hands `text` to the caller as a malloc-style C string.
unsafe fn export_string(text: String, out: *mut *mut c_char) -> AigsynthRc {
    match CString::new(text) {
        Ok(s) => {
            *out = s.into_raw();
            AigsynthRc::Ok
        }
        // The writers never emit interior NUL bytes.
        Err(_) => AigsynthRc::Internal,
    }
}

/// A zero from C means "no limit"; internally that is `None`.
fn node_limit_opt(raw: usize) -> Option<usize> {
    if raw == 0 {
        None
    } else {
        Some(raw)
    }
}

/// A zero from C means "no deadline"; internally that is a decade.
fn timeout_duration(secs: u64) -> Duration {
    if secs == 0 {
        Duration::from_secs(10 * 365 * 24 * 3600)
    } else {
        Duration::from_secs(secs)
    }
}

/// Returns the library version as a static, NUL-terminated string.
/// The caller must not free it.
#[no_mangle]
pub extern "C" fn aigsynth_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses `aag` circuit text into a new instance handle.
///
/// On success writes the handle to `*out` and returns `Ok`; the handle
/// must eventually go to [`aigsynth_instance_free`]. On failure `*out`
/// is set to null.
///
/// # Safety
/// `text` must be null or point to a NUL-terminated string; `out` must
/// be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_instance_parse(
    text: *const c_char,
    out: *mut *mut AigsynthInstance,
) -> AigsynthRc {
    if out.is_null() {
        return AigsynthRc::NullArgument;
    }
    *out = std::ptr::null_mut();
    let text = match text_arg(text) {
        Ok(t) => t,
        Err(rc) => return rc,
    };
    guarded(|| {
        let file = match parse_aag(text) {
            Ok(f) => f,
            Err(_) => return AigsynthRc::ParseError,
        };
        let spec = match split_inputs(&file) {
            Ok(s) => s,
            Err(_) => return AigsynthRc::ParseError,
        };
        *out = Box::into_raw(Box::new(AigsynthInstance { file, spec }));
        AigsynthRc::Ok
    })
}

/// Releases an instance handle. Passing null is a no-op.
///
/// # Safety
/// `inst` must be null or a handle from [`aigsynth_instance_parse`] that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_instance_free(inst: *mut AigsynthInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Reports the input and latch counts of an instance. Each out-pointer
/// may be null to skip that value.
///
/// # Safety
/// `inst` must be a live handle from [`aigsynth_instance_parse`]; each
/// non-null out-pointer must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_instance_counts(
    inst: *const AigsynthInstance,
    out_uncontrollable: *mut u32,
    out_controllable: *mut u32,
    out_latches: *mut u32,
) -> AigsynthRc {
    let Some(inst) = inst.as_ref() else {
        return AigsynthRc::NullArgument;
    };
    if let Some(out) = out_uncontrollable.as_mut() {
        *out = inst.spec.uncontrollable.len() as u32;
    }
    if let Some(out) = out_controllable.as_mut() {
        *out = inst.spec.controllable.len() as u32;
    }
    if let Some(out) = out_latches.as_mut() {
        *out = inst.spec.latches.len() as u32;
    }
    AigsynthRc::Ok
}

/// Decides realizability of an instance and writes the verdict to
/// `*out_status`. `timeout_secs` of zero disables the deadline and
/// `node_limit` of zero disables the node cap; a budget that runs out
/// is still `Ok` here, with the status reporting which budget it was.
///
/// # Safety
/// `inst` must be a live handle from [`aigsynth_instance_parse`];
/// `out_status` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_solve(
    inst: *const AigsynthInstance,
    algo: AigsynthAlgo,
    timeout_secs: u64,
    node_limit: usize,
    out_status: *mut AigsynthStatus,
) -> AigsynthRc {
    if inst.is_null() || out_status.is_null() {
        return AigsynthRc::NullArgument;
    }
    let inst = &*inst;
    guarded(|| {
        match solve_spec(
            &inst.spec,
            algo.into(),
            timeout_duration(timeout_secs),
            node_limit_opt(node_limit),
        ) {
            Ok((stats, _)) => {
                *out_status = stats.status.into();
                AigsynthRc::Ok
            }
            Err(_) => AigsynthRc::Internal,
        }
    })
}

/// Synthesizes a controller and returns the controlled circuit as `aag`
/// text in `*out_aag` (release it with [`aigsynth_string_free`]).
/// `*out_gates`, when non-null, receives the controller's AND-gate
/// count. Returns `Ok` exactly when a verified controller was produced;
/// `Unfinished` means unrealizable or out of budget, with `*out_status`
/// saying which. Zero `timeout_secs` or `node_limit` disables that
/// budget; `rerun_reach` re-extracts restricted to the reachable states
/// of a first controller, which often shrinks it.
///
/// # Safety
/// `inst` must be a live handle from [`aigsynth_instance_parse`];
/// `out_status` and `out_aag` must point to writable memory, and
/// `out_gates` must be null or do the same.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_synthesize(
    inst: *const AigsynthInstance,
    algo: AigsynthAlgo,
    timeout_secs: u64,
    node_limit: usize,
    rerun_reach: bool,
    alt_restrict: bool,
    out_status: *mut AigsynthStatus,
    out_aag: *mut *mut c_char,
    out_gates: *mut usize,
) -> AigsynthRc {
    if inst.is_null() || out_status.is_null() || out_aag.is_null() {
        return AigsynthRc::NullArgument;
    }
    let inst = &*inst;
    *out_aag = std::ptr::null_mut();
    guarded(|| {
        let outcome = match synthesize(
            &inst.file,
            &inst.spec,
            algo.into(),
            timeout_duration(timeout_secs),
            node_limit_opt(node_limit),
            rerun_reach,
            alt_restrict,
        ) {
            Ok(o) => o,
            Err(_) => return AigsynthRc::Internal,
        };
        match outcome {
            SynthOutcome::Controlled { file, gates } => {
                *out_status = AigsynthStatus::Realizable;
                if let Some(out) = out_gates.as_mut() {
                    *out = gates;
                }
                export_string(write_aag(&file), out_aag)
            }
            SynthOutcome::Unfinished(status) => {
                *out_status = status.into();
                AigsynthRc::Unfinished
            }
            SynthOutcome::VerificationFailed => AigsynthRc::Internal,
        }
    })
}

/// Writes the n-bit ripple-counter benchmark as `aag` text to
/// `*out_aag` (release it with [`aigsynth_string_free`]). `n` must be
/// between 1 and 30.
///
/// # Safety
/// `out_aag` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_gen_cnt(n: u32, out_aag: *mut *mut c_char) -> AigsynthRc {
    if out_aag.is_null() {
        return AigsynthRc::NullArgument;
    }
    *out_aag = std::ptr::null_mut();
    if !(1..=30).contains(&n) {
        return AigsynthRc::InvalidArgument;
    }
    guarded(|| export_string(write_aag(&gen_cnt(n)), out_aag))
}

/// Releases a string produced by this library. Passing null is a no-op.
///
/// # Safety
/// `s` must be null or a string obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn aigsynth_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
