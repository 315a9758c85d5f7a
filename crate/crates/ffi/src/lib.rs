//! C ABI over the milpgen toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`MilpgenError`]; on failure, [`milpgen_last_error_message`] describes
//! the error for the calling thread. Output parameters are written only on
//! success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use milpgen::analytics::instance_stats;
use milpgen::dataset::{gen_comb_auction, gen_set_cover, load_records, CaConfig, ScConfig};
use milpgen::instance::{instance_from_json, instance_to_json, FTuple, MilpInstance, Mode, SparseMatrix, Status};
use milpgen::solver::{classify, extract_labels, solve_milp, LabelOptions, SolverParams};
use milpgen::vae::{sample_instances, InferConfig, Vae};
use milpgen::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpgenError {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    SolverLimit = 3,
    Assembly = 4,
    Parse = 5,
    Io = 6,
    InvalidUtf8 = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpgenStatus {
    Infeasible = 0,
    Unbounded = 1,
    Optimal = 2,
}

impl From<Status> for MilpgenStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Infeasible => MilpgenStatus::Infeasible,
            Status::Unbounded => MilpgenStatus::Unbounded,
            Status::Optimal => MilpgenStatus::Optimal,
        }
    }
}

/// Branch-and-bound result under default parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpgenSolveResult {
    /// Meaningful only when `proven` is true.
    pub status: MilpgenStatus,
    pub proven: bool,
    /// Optimal objective in the instance's original sense; NaN otherwise.
    pub value: f64,
    pub nodes: usize,
    pub pivots: usize,
    pub limit_hit: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpgenStats {
    pub density_mean: f64,
    pub cons_degree_mean: f64,
    pub cons_degree_std: f64,
    pub var_degree_mean: f64,
    pub var_degree_std: f64,
    pub b_mean: f64,
    pub b_std: f64,
    pub c_mean: f64,
    pub c_std: f64,
}

/// An instance, optionally with its solution tuple.
pub struct MilpgenInstance {
    inst: MilpInstance,
    labels: Option<FTuple>,
}

/// A trained generator.
pub struct MilpgenModel {
    vae: Vae,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_of(e: &Error) -> MilpgenError {
    match e {
        Error::Stage { source, .. } => code_of(source),
        Error::Parse { .. } | Error::Format { .. } => MilpgenError::Parse,
        Error::Io(_) => MilpgenError::Io,
        other => match other.exit_code() {
            2 => MilpgenError::Validation,
            3 => MilpgenError::SolverLimit,
            4 => MilpgenError::Assembly,
            _ => MilpgenError::Other,
        },
    }
}

struct Fail(MilpgenError, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(code_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MilpgenError::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a code plus message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MilpgenError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MilpgenError::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_last_error(&msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            MilpgenError::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(MilpgenError::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn milpgen_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn milpgen_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an instance from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_from_json(json: *const c_char, out: *mut *mut MilpgenInstance) -> MilpgenError {
    guard(|| {
        let json = text(json, "json")?;
        let (inst, labels) = instance_from_json(json, Path::new("<json>"))?;
        emit(out, MilpgenInstance { inst, labels })
    })
}

/// Loads the first instance of a JSON file or directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_load(path: *const c_char, out: *mut *mut MilpgenInstance) -> MilpgenError {
    guard(|| {
        let path = text(path, "path")?;
        let rec = load_records(Path::new(path))?.swap_remove(0);
        emit(
            out,
            MilpgenInstance {
                inst: rec.instance,
                labels: rec.labels,
            },
        )
    })
}

/// Serializes an instance (with labels, if attached). Free the string with
/// [`milpgen_string_free`].
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_to_json(inst: *const MilpgenInstance, out: *mut *mut c_char) -> MilpgenError {
    guard(|| {
        let h = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let json = instance_to_json(&h.inst, h.labels.as_ref());
        *out = CString::new(json).expect("JSON has no NUL bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn milpgen_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `inst` must come from this library and not be used afterwards, or be null.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_free(inst: *mut MilpgenInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Constraint count, variable count and number of nonzeros.
///
/// # Safety
/// `inst` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_dims(
    inst: *const MilpgenInstance,
    n_cons: *mut usize,
    n_vars: *mut usize,
    nnz: *mut usize,
) -> MilpgenError {
    guard(|| {
        let h = handle(inst, "instance")?;
        if n_cons.is_null() || n_vars.is_null() || nnz.is_null() {
            return Err(null("output pointer"));
        }
        *n_cons = h.inst.n_cons();
        *n_vars = h.inst.n_vars();
        *nnz = h.inst.a.nnz();
        Ok(())
    })
}

/// Whether the instance bounds every variable by 1.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_is_binary(inst: *const MilpgenInstance, out: *mut bool) -> MilpgenError {
    guard(|| {
        let h = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = h.inst.mode == Mode::Binary;
        Ok(())
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if len != src.len() {
        return Err(Fail(
            MilpgenError::Validation,
            format!("buffer holds {len} values, expected {}", src.len()),
        ));
    }
    if len > 0 {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    }
    Ok(())
}

/// Copies the canonical right-hand side `b` (length = constraint count).
///
/// # Safety
/// `inst` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_rhs(inst: *const MilpgenInstance, buf: *mut f64, len: usize) -> MilpgenError {
    guard(|| copy_out(&handle(inst, "instance")?.inst.b, buf, len))
}

/// Copies the canonical objective `c` (length = variable count).
///
/// # Safety
/// `inst` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_objective(
    inst: *const MilpgenInstance,
    buf: *mut f64,
    len: usize,
) -> MilpgenError {
    guard(|| copy_out(&handle(inst, "instance")?.inst.c, buf, len))
}

/// Set-cover instance in canonical form.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_gen_set_cover(
    n_cons: usize,
    n_vars: usize,
    density: f64,
    seed: u64,
    out: *mut *mut MilpgenInstance,
) -> MilpgenError {
    guard(|| {
        let inst = gen_set_cover(&ScConfig::new(n_cons, n_vars, density, seed))?;
        emit(out, MilpgenInstance { inst, labels: None })
    })
}

/// Combinatorial-auction (set packing) instance.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_gen_comb_auction(
    n_items: usize,
    n_bids: usize,
    max_bundle: usize,
    seed: u64,
    out: *mut *mut MilpgenInstance,
) -> MilpgenError {
    guard(|| {
        let inst = gen_comb_auction(&CaConfig::new(n_items, n_bids, max_bundle, seed))?;
        emit(out, MilpgenInstance { inst, labels: None })
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_classify(inst: *const MilpgenInstance, out: *mut MilpgenStatus) -> MilpgenError {
    guard(|| {
        let h = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = classify(&h.inst)?.into();
        Ok(())
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_solve(inst: *const MilpgenInstance, out: *mut MilpgenSolveResult) -> MilpgenError {
    guard(|| {
        let h = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let rep = solve_milp(&h.inst, &SolverParams::default())?;
        let (status, proven, value) = match &rep.outcome {
            Some(o) => (
                o.status.into(),
                true,
                o.value.map_or(f64::NAN, |v| h.inst.reported_objective(v)),
            ),
            None => (MilpgenStatus::Infeasible, false, f64::NAN),
        };
        *out = MilpgenSolveResult {
            status,
            proven,
            value,
            nodes: rep.effort_nodes,
            pivots: rep.effort_pivots,
            limit_hit: rep.limit_hit,
        };
        Ok(())
    })
}

/// Solves the instance and its dual and attaches the `(x, y, s, r)` tuple.
///
/// # Safety
/// `inst` must be a live handle not shared with another thread.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_label(inst: *mut MilpgenInstance) -> MilpgenError {
    guard(|| {
        let h = inst.as_mut().ok_or_else(|| null("instance"))?;
        h.labels = Some(extract_labels(&h.inst, &LabelOptions::default())?);
        Ok(())
    })
}

/// Builds the instance whose `(b, c)` follow from a solution tuple.
///
/// The matrix is given as `nnz` triplets. `y2` (length `n_vars`) is read
/// only when `binary` is true and must be null otherwise.
///
/// # Safety
/// Every non-null array must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_from_tuple(
    binary: bool,
    n_cons: usize,
    n_vars: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    vals: *const f64,
    x: *const f64,
    y: *const f64,
    y2: *const f64,
    s: *const f64,
    r: *const f64,
    out: *mut *mut MilpgenInstance,
) -> MilpgenError {
    guard(|| {
        let (rows, cols, vals) = (slice(rows, nnz, "rows")?, slice(cols, nnz, "cols")?, slice(vals, nnz, "vals")?);
        let trip: Vec<(usize, usize, f64)> = (0..nnz).map(|k| (rows[k], cols[k], vals[k])).collect();
        let y2 = match (binary, y2.is_null()) {
            (true, false) => Some(slice(y2, n_vars, "y2")?.to_vec()),
            (true, true) => return Err(null("y2")),
            (false, true) => None,
            (false, false) => {
                return Err(Fail(MilpgenError::Validation, "y2 given for a general-integer tuple".into()))
            }
        };
        let t = FTuple {
            mode: if binary { Mode::Binary } else { Mode::GeneralInteger },
            a: SparseMatrix::from_triplets(n_cons, n_vars, &trip)?,
            x: slice(x, n_vars, "x")?.to_vec(),
            y: slice(y, n_cons, "y")?.to_vec(),
            y2,
            s: slice(s, n_vars, "s")?.to_vec(),
            r: slice(r, n_cons, "r")?.to_vec(),
        };
        let inst = t.to_instance("tuple")?;
        emit(out, MilpgenInstance { inst, labels: Some(t) })
    })
}

/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_instance_stats(inst: *const MilpgenInstance, out: *mut MilpgenStats) -> MilpgenError {
    guard(|| {
        let h = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let p = instance_stats(&h.inst);
        *out = MilpgenStats {
            density_mean: p.density_mean,
            cons_degree_mean: p.cons_degree_mean,
            cons_degree_std: p.cons_degree_std,
            var_degree_mean: p.var_degree_mean,
            var_degree_std: p.var_degree_std,
            b_mean: p.b_mean,
            b_std: p.b_std,
            c_mean: p.c_mean,
            c_std: p.c_std,
        };
        Ok(())
    })
}

/// Loads a generator checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn milpgen_model_load(path: *const c_char, out: *mut *mut MilpgenModel) -> MilpgenError {
    guard(|| {
        let path = text(path, "path")?;
        let bytes = std::fs::read(path).map_err(Error::from)?;
        emit(out, MilpgenModel { vae: Vae::from_bytes(&bytes)? })
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards, or be null.
#[no_mangle]
pub unsafe extern "C" fn milpgen_model_free(model: *mut MilpgenModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Generates `count` instances by rewriting constraints of labeled sources.
/// `out` receives `count` new handles, each to be freed by the caller.
///
/// # Safety
/// `sources` must hold `n_sources` live handles; `out` must hold `count`
/// writable slots.
#[no_mangle]
pub unsafe extern "C" fn milpgen_sample(
    model: *const MilpgenModel,
    sources: *const *const MilpgenInstance,
    n_sources: usize,
    gamma: f64,
    count: usize,
    seed: u64,
    out: *mut *mut MilpgenInstance,
) -> MilpgenError {
    guard(|| {
        let model = handle(model, "model")?;
        let tuples: Vec<FTuple> = slice(sources, n_sources, "sources")?
            .iter()
            .map(|&p| {
                let h = handle(p, "source")?;
                h.labels
                    .clone()
                    .ok_or_else(|| Fail(MilpgenError::Validation, format!("source '{}' has no labels", h.inst.name)))
            })
            .collect::<Result<_, Fail>>()?;
        if count > 0 && out.is_null() {
            return Err(null("output array"));
        }
        let samples = sample_instances(&tuples, &model.vae, &InferConfig { gamma, count, seed })?;
        for (k, (inst, t)) in samples.into_iter().enumerate() {
            *out.add(k) = Box::into_raw(Box::new(MilpgenInstance { inst, labels: Some(t) }));
        }
        Ok(())
    })
}
