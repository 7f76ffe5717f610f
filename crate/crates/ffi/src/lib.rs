//! C ABI for the oubv laboratory: opaque handles, status codes, and a
//! thread-local last-error message.
//!
//! Conventions:
//! - every constructor writes its result through an out-pointer and returns
//!   `OubvStatus`; on failure the out-pointer is untouched and
//!   `oubv_last_error_message` describes the problem;
//! - handles are freed exactly once with the matching `_free` function;
//!   passing null to a `_free` is a no-op;
//! - points are passed as `double` buffers of length `dim`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_ulonglong, CStr, CString};
use std::sync::Arc;

use oubv::bv::{sobolev_variation, InitialDatum};
use oubv::convex::{parse_domain_spec, ConvexBody};
use oubv::grid::{gaussian_integrate, GaussianGrid, Point, ScalarField};
use oubv::mehler::mehler_apply;
use oubv::operator::OuOperator;
use oubv::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OubvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
    IoError = 4,
    Utf8Error = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> OubvStatus {
    match err {
        Error::Io { .. } => OubvStatus::IoError,
        Error::SolverStall { .. } => OubvStatus::NumericalError,
        _ => OubvStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> OubvStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn fail_null(what: &str) -> OubvStatus {
    set_error(format!("null pointer: {what}"));
    OubvStatus::NullPointer
}

/// Most recent error message on this thread, or null if none was recorded.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn oubv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

pub struct OubvGrid {
    inner: Arc<GaussianGrid>,
}

pub struct OubvBody {
    inner: ConvexBody,
}

pub struct OubvField {
    inner: ScalarField,
}

pub struct OubvOperator {
    inner: OuOperator,
}

unsafe fn point_from(coords: *const c_double, dim: usize) -> Point {
    let mut p = [0.0; 3];
    for (k, slot) in p.iter_mut().enumerate().take(dim.min(3)) {
        *slot = *coords.add(k);
    }
    p
}

// ---------------------------------------------------------------------------
// grids
// ---------------------------------------------------------------------------

/// Builds the grid on [-half_width, half_width]^dim with the given spacing.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn oubv_grid_new(
    dim: usize,
    half_width: c_double,
    spacing: c_double,
    out: *mut *mut OubvGrid,
) -> OubvStatus {
    if out.is_null() {
        return fail_null("out");
    }
    match GaussianGrid::new(dim, half_width, spacing) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvGrid { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `grid` must be a live handle from `oubv_grid_new` or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_grid_free(grid: *mut OubvGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid nodes (0 on null).
///
/// # Safety
/// `grid` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_grid_len(grid: *const OubvGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    (*grid).inner.len()
}

/// # Safety
/// `grid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_grid_weight_sum(
    grid: *const OubvGrid,
    out: *mut c_double,
) -> OubvStatus {
    if grid.is_null() || out.is_null() {
        return fail_null("grid/out");
    }
    *out = (*grid).inner.weight_sum();
    OubvStatus::Ok
}

/// Gaussian mass outside the truncated box.
///
/// # Safety
/// `grid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_grid_tail_mass(
    grid: *const OubvGrid,
    out: *mut c_double,
) -> OubvStatus {
    if grid.is_null() || out.is_null() {
        return fail_null("grid/out");
    }
    *out = (*grid).inner.tail_mass();
    OubvStatus::Ok
}

// ---------------------------------------------------------------------------
// bodies
// ---------------------------------------------------------------------------

/// Parses `interval:a,b`, `ball:r`, `square:s`, or a body file path.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_body_parse(
    spec: *const c_char,
    dim: usize,
    out: *mut *mut OubvBody,
) -> OubvStatus {
    if spec.is_null() || out.is_null() {
        return fail_null("spec/out");
    }
    let Ok(spec) = CStr::from_ptr(spec).to_str() else {
        set_error("domain spec is not UTF-8".into());
        return OubvStatus::Utf8Error;
    };
    match parse_domain_spec(spec, dim) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvBody { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Smooth convex approximant of the body at enlargement `delta`.
///
/// # Safety
/// `body` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_body_smooth(
    body: *const OubvBody,
    delta: c_double,
    out: *mut *mut OubvBody,
) -> OubvStatus {
    if body.is_null() || out.is_null() {
        return fail_null("body/out");
    }
    match (*body).inner.smooth(delta) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvBody { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `body` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_body_free(body: *mut OubvBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Minkowski gauge of the body at a point of `dim` coordinates.
///
/// # Safety
/// `coords` must hold `dim` doubles; `body` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_body_minkowski(
    body: *const OubvBody,
    coords: *const c_double,
    dim: usize,
    out: *mut c_double,
) -> OubvStatus {
    if body.is_null() || coords.is_null() || out.is_null() {
        return fail_null("body/coords/out");
    }
    if dim != (*body).inner.dim() {
        set_error(format!(
            "point dim {dim} vs body dim {}",
            (*body).inner.dim()
        ));
        return OubvStatus::InvalidArgument;
    }
    let p = point_from(coords, dim);
    *out = (*body).inner.minkowski(&p);
    OubvStatus::Ok
}

/// Closed membership test (gauge <= 1); writes 1 or 0.
///
/// # Safety
/// `coords` must hold `dim` doubles; `body` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_body_contains(
    body: *const OubvBody,
    coords: *const c_double,
    dim: usize,
    out: *mut i32,
) -> OubvStatus {
    if body.is_null() || coords.is_null() || out.is_null() {
        return fail_null("body/coords/out");
    }
    if dim != (*body).inner.dim() {
        set_error(format!(
            "point dim {dim} vs body dim {}",
            (*body).inner.dim()
        ));
        return OubvStatus::InvalidArgument;
    }
    let p = point_from(coords, dim);
    *out = (*body).inner.contains(&p) as i32;
    OubvStatus::Ok
}

// ---------------------------------------------------------------------------
// fields
// ---------------------------------------------------------------------------

/// Field from a node-ordered value buffer of length `len` = grid length.
///
/// # Safety
/// `values` must hold `len` doubles; `grid` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_field_from_values(
    grid: *const OubvGrid,
    values: *const c_double,
    len: usize,
    out: *mut *mut OubvField,
) -> OubvStatus {
    if grid.is_null() || values.is_null() || out.is_null() {
        return fail_null("grid/values/out");
    }
    let vals = std::slice::from_raw_parts(values, len).to_vec();
    match ScalarField::from_values(&(*grid).inner, vals) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvField { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Field from an initial-datum spec: `sign`, `step:a`, `linear`,
/// `poly:c0,c1,c2`, or `file:path.csv`.
///
/// # Safety
/// `spec` must be NUL-terminated; `grid` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_field_from_datum(
    grid: *const OubvGrid,
    spec: *const c_char,
    out: *mut *mut OubvField,
) -> OubvStatus {
    if grid.is_null() || spec.is_null() || out.is_null() {
        return fail_null("grid/spec/out");
    }
    let Ok(spec) = CStr::from_ptr(spec).to_str() else {
        set_error("datum spec is not UTF-8".into());
        return OubvStatus::Utf8Error;
    };
    let datum = match InitialDatum::parse(spec) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    match datum.sample(&(*grid).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvField { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of node values (0 on null).
///
/// # Safety
/// `field` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_field_len(field: *const OubvField) -> usize {
    if field.is_null() {
        return 0;
    }
    (*field).inner.values().len()
}

/// Copies node values into `buf` (length `len` must match the field).
///
/// # Safety
/// `buf` must hold `len` writable doubles; `field` live.
#[no_mangle]
pub unsafe extern "C" fn oubv_field_values(
    field: *const OubvField,
    buf: *mut c_double,
    len: usize,
) -> OubvStatus {
    if field.is_null() || buf.is_null() {
        return fail_null("field/buf");
    }
    let values = (*field).inner.values();
    if len != values.len() {
        set_error(format!("buffer len {len} vs field len {}", values.len()));
        return OubvStatus::InvalidArgument;
    }
    std::slice::from_raw_parts_mut(buf, len).copy_from_slice(values);
    OubvStatus::Ok
}

/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_field_free(field: *mut OubvField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

// ---------------------------------------------------------------------------
// quadrature, semigroups, variation
// ---------------------------------------------------------------------------

/// Integral of the field against the Gaussian measure, restricted to `body`
/// when non-null.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_gaussian_integrate(
    field: *const OubvField,
    body: *const OubvBody,
    out: *mut c_double,
) -> OubvStatus {
    if field.is_null() || out.is_null() {
        return fail_null("field/out");
    }
    let body = if body.is_null() {
        None
    } else {
        Some(&(*body).inner)
    };
    match gaussian_integrate(&(*field).inner, body) {
        Ok(v) => {
            *out = v;
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Whole-space Ornstein-Uhlenbeck semigroup by the Mehler integral.
///
/// # Safety
/// `field` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_mehler_apply(
    field: *const OubvField,
    t: c_double,
    out: *mut *mut OubvField,
) -> OubvStatus {
    if field.is_null() || out.is_null() {
        return fail_null("field/out");
    }
    match mehler_apply(&(*field).inner, t) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvField { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// int_body |grad u| dgamma (Sobolev-form total variation).
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_sobolev_variation(
    field: *const OubvField,
    body: *const OubvBody,
    out: *mut c_double,
) -> OubvStatus {
    if field.is_null() || out.is_null() {
        return fail_null("field/out");
    }
    let body = if body.is_null() {
        None
    } else {
        Some(&(*body).inner)
    };
    match sobolev_variation(&(*field).inner, body) {
        Ok(v) => {
            *out = v.value;
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

/// Dirichlet-form operator on the strict interior of `body`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_operator_assemble(
    grid: *const OubvGrid,
    body: *const OubvBody,
    out: *mut *mut OubvOperator,
) -> OubvStatus {
    if grid.is_null() || body.is_null() || out.is_null() {
        return fail_null("grid/body/out");
    }
    match OuOperator::assemble(&(*grid).inner, &(*body).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvOperator { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Operator over every grid node (whole-box Neumann proxy).
///
/// # Safety
/// `grid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_operator_assemble_full(
    grid: *const OubvGrid,
    out: *mut *mut OubvOperator,
) -> OubvStatus {
    if grid.is_null() || out.is_null() {
        return fail_null("grid/out");
    }
    match OuOperator::assemble_full(&(*grid).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvOperator { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of interior unknowns (0 on null).
///
/// # Safety
/// `op` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_operator_interior_count(op: *const OubvOperator) -> usize {
    if op.is_null() {
        return 0;
    }
    (*op).inner.interior_count()
}

/// # Safety
/// `op` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn oubv_operator_free(op: *mut OubvOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// u = R(lambda, L) f: solves (lambda M + A) u = M f.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_solve_resolvent(
    op: *const OubvOperator,
    lambda: c_double,
    f: *const OubvField,
    out: *mut *mut OubvField,
) -> OubvStatus {
    if op.is_null() || f.is_null() || out.is_null() {
        return fail_null("op/f/out");
    }
    match (*op).inner.solve_resolvent(lambda, &(*f).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvField { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Approximates T_t u0 with `steps` trapezoidal steps (backward-Euler
/// startup); requires t/steps <= grid spacing.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oubv_evolve(
    op: *const OubvOperator,
    u0: *const OubvField,
    t: c_double,
    steps: c_ulonglong,
    out: *mut *mut OubvField,
) -> OubvStatus {
    if op.is_null() || u0.is_null() || out.is_null() {
        return fail_null("op/u0/out");
    }
    match (*op).inner.evolve(&(*u0).inner, t, steps as usize) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OubvField { inner }));
            OubvStatus::Ok
        }
        Err(e) => fail(e),
    }
}
