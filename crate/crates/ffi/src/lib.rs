//! C ABI for the `mwg` solver.
//!
//! Meshes and solutions are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`MwgStatus`]; on failure a description is available from
//! [`mwg_last_error_message`] until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_uint, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mwg::driver::{builtin_solution, solve_on_mesh, LevelOutput, SolutionDocument};
use mwg::mesh::{read_mesh_json, validate_mesh, write_mesh_json};
use mwg::{build_uniform_hex_mesh, MwgError, PolyMesh};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MwgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    NumericalError = 4,
    UnknownSolution = 5,
    IoError = 6,
    Panic = 7,
}

/// Opaque mesh handle.
pub struct MwgMesh {
    inner: PolyMesh,
}

/// Opaque handle to a discrete solution and its error report.
pub struct MwgSolution {
    degree: usize,
    inner: LevelOutput,
}

/// Error measures of a solution against the exact manufactured solution.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MwgErrors {
    pub cells: usize,
    pub unknowns: usize,
    pub err_u_l2: f64,
    pub err_u_energy: f64,
    pub err_p_l2: f64,
    pub err_p_jump: f64,
    pub solve_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &MwgError) -> MwgStatus {
    use MwgError::*;
    match e {
        MalformedMesh(_) | DanglingId(_) | NonPlanarFace { .. } | EmptyMesh | UnsupportedCell(_) => {
            MwgStatus::MeshError
        }
        InvalidArgument(_) | Mismatch(_) | MissingTrace(_) => MwgStatus::InvalidArgument,
        UnknownSolution(_) => MwgStatus::UnknownSolution,
        Io(_) | Json(_) => MwgStatus::IoError,
        _ => MwgStatus::NumericalError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (MwgStatus, String)>) -> MwgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MwgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MwgStatus::Panic
        }
    }
}

fn lift(e: MwgError) -> (MwgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MwgStatus, String) {
    (MwgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MwgStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MwgStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message for the most recent failure on this thread, or null. The string
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mwg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mwg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mwg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Uniform mesh of the unit cube with `n` cells per direction.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn mwg_mesh_uniform(n: usize, out: *mut *mut MwgMesh) -> MwgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = build_uniform_hex_mesh(n).map_err(lift)?;
        *out = Box::into_raw(Box::new(MwgMesh { inner }));
        Ok(())
    })
}

/// Mesh from its JSON description (vertices, faces with owner/neighbor,
/// cells as face lists).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_mesh_from_json(json: *const c_char, out: *mut *mut MwgMesh) -> MwgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let inner = read_mesh_json(text).map_err(lift)?;
        *out = Box::into_raw(Box::new(MwgMesh { inner }));
        Ok(())
    })
}

/// JSON description of a mesh; release with [`mwg_string_free`].
///
/// # Safety
/// `mesh` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_mesh_to_json(mesh: *const MwgMesh, out: *mut *mut c_char) -> MwgStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(write_mesh_json(&mesh.inner)).map_err(|e| (MwgStatus::IoError, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Number of cells and faces.
///
/// # Safety
/// `mesh` must be a live handle; `cells` and `faces` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_mesh_size(mesh: *const MwgMesh, cells: *mut usize, faces: *mut usize) -> MwgStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if cells.is_null() || faces.is_null() {
            return Err(null("output"));
        }
        *cells = mesh.inner.num_cells();
        *faces = mesh.inner.num_faces();
        Ok(())
    })
}

/// Runs the mesh checks and stores the number of violations. The first
/// violation, if any, is available from [`mwg_last_error_message`].
///
/// # Safety
/// `mesh` must be a live handle; `violations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_mesh_validate(mesh: *const MwgMesh, violations: *mut usize) -> MwgStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if violations.is_null() {
            return Err(null("violations"));
        }
        let v = validate_mesh(&mesh.inner);
        *violations = v.len();
        if let Some(first) = v.first() {
            set_error(first.to_string());
        }
        Ok(())
    })
}

/// Releases a mesh handle.
///
/// # Safety
/// `mesh` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mwg_mesh_free(mesh: *mut MwgMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Solves with degree `degree` for the named built-in solution and measures
/// the errors against it.
///
/// # Safety
/// `mesh` must be a live handle, `solution` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_solve(
    mesh: *const MwgMesh,
    degree: c_uint,
    solution: *const c_char,
    tol: f64,
    out: *mut *mut MwgSolution,
) -> MwgStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(solution, "solution")?;
        let k = degree as usize;
        if !(1..=mwg::driver::MAX_DEGREE).contains(&k) {
            return Err((MwgStatus::InvalidArgument, format!("unsupported degree {k}")));
        }
        let spec = builtin_solution(name).map_err(lift)?;
        let inner = solve_on_mesh(&mesh.inner, 0, k, &spec, spec.nu, tol).map_err(lift)?;
        *out = Box::into_raw(Box::new(MwgSolution { degree: k, inner }));
        Ok(())
    })
}

/// Error report of a solution.
///
/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_solution_errors(sol: *const MwgSolution, out: *mut MwgErrors) -> MwgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = &sol.inner.report;
        *out = MwgErrors {
            cells: r.cells,
            unknowns: r.unknowns,
            err_u_l2: r.err_u_l2,
            err_u_energy: r.err_u_energy,
            err_p_l2: r.err_p_l2,
            err_p_jump: r.err_p_jump,
            solve_residual: r.solve_residual,
        };
        Ok(())
    })
}

/// Borrowed view of the velocity coefficients (`3 dim P_k` per cell,
/// component-major). Valid while the handle lives.
///
/// # Safety
/// `sol` must be a live handle; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_solution_velocity(
    sol: *const MwgSolution,
    data: *mut *const f64,
    len: *mut usize,
) -> MwgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if data.is_null() || len.is_null() {
            return Err(null("output"));
        }
        *data = sol.inner.u.as_ptr();
        *len = sol.inner.u.len();
        Ok(())
    })
}

/// Borrowed view of the pressure coefficients (`dim P_{k-1}` per cell).
/// Valid while the handle lives.
///
/// # Safety
/// `sol` must be a live handle; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_solution_pressure(
    sol: *const MwgSolution,
    data: *mut *const f64,
    len: *mut usize,
) -> MwgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if data.is_null() || len.is_null() {
            return Err(null("output"));
        }
        *data = sol.inner.p.as_ptr();
        *len = sol.inner.p.len();
        Ok(())
    })
}

/// Per-cell coefficients as JSON; release with [`mwg_string_free`].
///
/// # Safety
/// `sol` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_solution_to_json(sol: *const MwgSolution, out: *mut *mut c_char) -> MwgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let doc = SolutionDocument::from_level(sol.degree, &sol.inner);
        let text = doc.to_json().map_err(lift)?;
        *out = CString::new(text).map_err(|e| (MwgStatus::IoError, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a solution handle.
///
/// # Safety
/// `sol` must be null or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mwg_solution_free(sol: *mut MwgSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// `log2(coarse / fine)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mwg_convergence_order(coarse: f64, fine: f64, out: *mut f64) -> MwgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = mwg::analysis::convergence_order(coarse, fine).map_err(lift)?;
        Ok(())
    })
}
