//! C ABI for the olim eikonal solver.
//!
//! Grids and solutions are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible function
//! returns an [`OlimStatus`]; on failure a message is kept per thread and
//! can be read with [`olim_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use olim::factoring::PointSourceFactor;
use olim::grid::io::{read_grid, write_grid};
use olim::grid::{GridSpec, SlownessGrid, StencilKind};
use olim::marcher::{solve, Solution, SolverConfig};
use olim::updates::QuadRule;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OlimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Solve = 4,
    Panic = 5,
}

/// Slowness samples on a uniform grid.
pub struct OlimGrid(SlownessGrid);

/// Solved U field with its statistics.
pub struct OlimSolution(Solution);

/// Solver counters of one solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OlimStats {
    pub line_attempted: u64,
    pub tri_attempted: u64,
    pub tet_attempted: u64,
    pub skipped_visibility: u64,
    pub skipped_constrained: u64,
    pub skipped_kkt: u64,
    pub no_characteristic: u64,
    pub heap_ops: u64,
    pub accepted: u64,
    pub max_monotone_violation: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("NULs removed"));
}

struct Failure(OlimStatus, String);

fn fail<T>(status: OlimStatus, msg: impl ToString) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

/// Runs `f`, records its error message and turns panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OlimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OlimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OlimStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(OlimStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(OlimStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(OlimStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure(OlimStatus::NullPointer, format!("{what} is null")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn invalid(e: impl ToString) -> Failure {
    Failure(OlimStatus::InvalidArgument, e.to_string())
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on the
/// same thread.
#[no_mangle]
pub extern "C" fn olim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn olim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a grid of `dim` (2 or 3) axes from `len` row-major slowness
/// samples.
///
/// # Safety
/// `shape` and `origin` must point to `dim` values, `s` to `len` values and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn olim_grid_new(
    dim: usize,
    shape: *const usize,
    h: f64,
    origin: *const f64,
    s: *const f64,
    len: usize,
    out: *mut *mut OlimGrid,
) -> OlimStatus {
    guard(|| {
        if out.is_null() {
            return fail(OlimStatus::NullPointer, "out is null");
        }
        if !(2..=3).contains(&dim) {
            return fail(OlimStatus::InvalidArgument, format!("dimension must be 2 or 3, got {dim}"));
        }
        let shape = slice(shape, dim, "shape")?.to_vec();
        let origin = slice(origin, dim, "origin")?.to_vec();
        let s = slice(s, len, "slowness")?.to_vec();
        let spec = GridSpec::new(dim, shape, h, origin).map_err(invalid)?;
        let grid = SlownessGrid::new(spec, s).map_err(invalid)?;
        store(out, OlimGrid(grid))
    })
}

/// Reads a raw f64 slowness file with its `<path>.json` sidecar.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn olim_grid_read(path: *const c_char, out: *mut *mut OlimGrid) -> OlimStatus {
    guard(|| {
        if out.is_null() {
            return fail(OlimStatus::NullPointer, "out is null");
        }
        let path = str_arg(path, "path")?;
        let (spec, s) = read_grid(Path::new(path)).map_err(|e| Failure(OlimStatus::Io, e.to_string()))?;
        let grid = SlownessGrid::new(spec, s).map_err(invalid)?;
        store(out, OlimGrid(grid))
    })
}

/// Releases a grid. Null is ignored.
///
/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olim_grid_free(grid: *mut OlimGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes of the grid, or 0 for null.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn olim_grid_num_nodes(grid: *const OlimGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.spec().num_nodes())
}

/// Linear index of the node nearest to `coord` (`dim` values).
///
/// # Safety
/// `grid` must be live, `coord` must point to `dim` values and `node` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn olim_grid_nearest_node(
    grid: *const OlimGrid,
    coord: *const f64,
    node: *mut usize,
) -> OlimStatus {
    guard(|| {
        let g = handle(grid, "grid")?;
        if node.is_null() {
            return fail(OlimStatus::NullPointer, "node is null");
        }
        let coord = slice(coord, g.0.spec().dim, "coord")?;
        *node = g.0.spec().nearest_node(coord).map_err(invalid)?.0;
        Ok(())
    })
}

/// Solves on `grid` with `n_boundary` boundary nodes and values.
///
/// `stencil` is one of `olim4`, `olim8`, `olim6`, `olim18`, `olim26`,
/// `olim3d`; `rule` one of `rhr`, `mp0`, `mp1`. A nonnegative
/// `factor_radius` factors around every boundary node using the grid
/// slowness there; pass a negative value to solve unfactored.
///
/// # Safety
/// `grid` must be live, the strings NUL-terminated, `nodes` and `values`
/// must point to `n_boundary` entries and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn olim_solve(
    grid: *const OlimGrid,
    stencil: *const c_char,
    rule: *const c_char,
    nodes: *const usize,
    values: *const f64,
    n_boundary: usize,
    factor_radius: f64,
    out: *mut *mut OlimSolution,
) -> OlimStatus {
    guard(|| {
        let g = &handle(grid, "grid")?.0;
        if out.is_null() {
            return fail(OlimStatus::NullPointer, "out is null");
        }
        let stencil: StencilKind = str_arg(stencil, "stencil")?.parse().map_err(invalid)?;
        let rule: QuadRule = str_arg(rule, "rule")?.parse().map_err(invalid)?;
        let nodes = slice(nodes, n_boundary, "nodes")?;
        let values = slice(values, n_boundary, "values")?;
        let boundary: Vec<(usize, f64)> = nodes.iter().copied().zip(values.iter().copied()).collect();
        let mut config = SolverConfig::new(stencil, rule);
        if factor_radius >= 0.0 {
            let spec = g.spec();
            let mut factors = Vec::new();
            for &(node, _) in &boundary {
                if node >= spec.num_nodes() {
                    return fail(OlimStatus::InvalidArgument, format!("boundary node {node} is out of bounds"));
                }
                let x = spec.coord3(node)[..spec.dim].to_vec();
                factors.push(PointSourceFactor::new(x, g.at(node), factor_radius).map_err(invalid)?);
            }
            config = config.with_factors(factors);
        } else if factor_radius.is_nan() {
            return fail(OlimStatus::InvalidArgument, "factor radius is NaN");
        }
        let sol = solve(g, &boundary, &config).map_err(|e| Failure(OlimStatus::Solve, e.to_string()))?;
        store(out, OlimSolution(sol))
    })
}

/// Releases a solution. Null is ignored.
///
/// # Safety
/// `sol` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn olim_solution_free(sol: *mut OlimSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of values in the solution, or 0 for null.
///
/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn olim_solution_len(sol: *const OlimSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.0.values.len())
}

/// Copies the U field into `out`, which must hold exactly
/// `olim_solution_len(sol)` values.
///
/// # Safety
/// `sol` must be live and `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn olim_solution_values(sol: *const OlimSolution, out: *mut f64, len: usize) -> OlimStatus {
    guard(|| {
        let s = &handle(sol, "solution")?.0;
        if len != s.values.len() {
            return fail(
                OlimStatus::InvalidArgument,
                format!("buffer holds {len} values, solution has {}", s.values.len()),
            );
        }
        if out.is_null() {
            return fail(OlimStatus::NullPointer, "out is null");
        }
        ptr::copy_nonoverlapping(s.values.as_ptr(), out, len);
        Ok(())
    })
}

/// Copies the solver counters into `out`.
///
/// # Safety
/// `sol` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn olim_solution_stats(sol: *const OlimSolution, out: *mut OlimStats) -> OlimStatus {
    guard(|| {
        let st = &handle(sol, "solution")?.0.stats;
        if out.is_null() {
            return fail(OlimStatus::NullPointer, "out is null");
        }
        *out = OlimStats {
            line_attempted: st.line_attempted,
            tri_attempted: st.tri_attempted,
            tet_attempted: st.tet_attempted,
            skipped_visibility: st.skipped_visibility,
            skipped_constrained: st.skipped_constrained,
            skipped_kkt: st.skipped_kkt,
            no_characteristic: st.no_characteristic,
            heap_ops: st.heap_ops,
            accepted: st.accepted,
            max_monotone_violation: st.max_monotone_violation,
        };
        Ok(())
    })
}

/// Writes the U field as a raw f64 file plus `<path>.json` sidecar.
///
/// # Safety
/// `sol` must be live and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn olim_solution_write(sol: *const OlimSolution, path: *const c_char) -> OlimStatus {
    guard(|| {
        let s = &handle(sol, "solution")?.0;
        let path = str_arg(path, "path")?;
        write_grid(Path::new(path), &s.spec, &s.values).map_err(|e| Failure(OlimStatus::Io, e.to_string()))
    })
}
