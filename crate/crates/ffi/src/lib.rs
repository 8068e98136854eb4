//! C ABI for the qgeom engine.
//!
//! Every entry point returns a [`QgStatus`]; on failure the message is
//! available from [`qg_last_error`] on the same thread. Handles are opaque
//! and released with their `_free` function. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use qgeom::gauss::{purity, symplectic_eigenvalues, von_neumann_entropy, CovarianceMatrix};
use qgeom::geometry::{ricci_scalar, GeometryOptions, MetricField};
use qgeom::models::{ModelSpec, ParamPoint, Quantity};
use qgeom::qgt::{qgt_overlap_fd, qgt_perturbative, Options, QgtResult, StateSelector};
use qgeom::{Error, ErrorKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// A model instance.
pub struct QgModel(ModelSpec);

/// A computed QGT or QGT block.
pub struct QgTensor(QgtResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: &Error) -> QgStatus {
    set_error(&e.to_string());
    match e.kind() {
        ErrorKind::Usage => QgStatus::InvalidArgument,
        ErrorKind::Domain => QgStatus::Domain,
        ErrorKind::Numerical => QgStatus::Numerical,
    }
}

fn null(what: &str) -> QgStatus {
    set_error(&format!("null pointer: {what}"));
    QgStatus::NullPointer
}

fn guard(f: impl FnOnce() -> QgStatus) -> QgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == QgStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            QgStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn string(p: *const c_char) -> Result<String, QgStatus> {
    if p.is_null() {
        return Err(null("string"));
    }
    CStr::from_ptr(p).to_str().map(str::to_string).map_err(|_| {
        set_error("string is not valid UTF-8");
        QgStatus::InvalidArgument
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a built-in model by name (`gho`, `gho-linear`, `gaussian`,
/// `sym-coupled`, `lin-coupled`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qg_model_new(name: *const c_char, out: *mut *mut QgModel) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let name = match string(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match ModelSpec::from_name(&name) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(QgModel(m)));
                QgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `model` must come from [`qg_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qg_model_free(model: *mut QgModel) {
    if !model.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(model))));
    }
}

/// Number of parameters and modes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_model_shape(model: *const QgModel, params: *mut usize, modes: *mut usize) -> QgStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return null("model") };
        if params.is_null() || modes.is_null() {
            return null("out");
        }
        *params = m.0.param_names().len();
        *modes = m.0.dof();
        QgStatus::Ok
    })
}

unsafe fn point_and_qn(
    point: *const f64,
    n_point: usize,
    qn: *const u32,
    n_qn: usize,
) -> Result<(ParamPoint, Vec<u32>), QgStatus> {
    let p = slice(point, n_point).ok_or_else(|| null("point"))?;
    let q = slice(qn, n_qn).ok_or_else(|| null("quantum_numbers"))?;
    Ok((ParamPoint::new(p.to_vec()), q.to_vec()))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QgMethod {
    Perturbative = 0,
    OverlapFd = 1,
}

/// Numerical QGT of the state with the given quantum numbers at `cutoff`
/// levels per mode. The perturbative method returns the full tensor,
/// overlap-fd the parameter block.
///
/// # Safety
/// `model` must be valid; `point` and `qn` must hold `n_point` and `n_qn`
/// elements; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qg_qgt(
    model: *const QgModel,
    method: QgMethod,
    point: *const f64,
    n_point: usize,
    qn: *const u32,
    n_qn: usize,
    cutoff: usize,
    out: *mut *mut QgTensor,
) -> QgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Some(m) = model.as_ref() else { return null("model") };
        let (p, q) = match point_and_qn(point, n_point, qn, n_qn) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let sel = StateSelector::new(q);
        let opts = Options::default();
        let r = m.0.default_basis(&p, cutoff).and_then(|b| match method {
            QgMethod::Perturbative => qgt_perturbative(&m.0, &p, &sel, &b, &opts),
            QgMethod::OverlapFd => qgt_overlap_fd(&m.0, &p, &sel, &b, &opts),
        });
        match r {
            Ok(t) => {
                *out = Box::into_raw(Box::new(QgTensor(t)));
                QgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `t` must come from [`qg_qgt`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qg_tensor_free(t: *mut QgTensor) {
    if !t.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(t))));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_tensor_dim(t: *const QgTensor, dim: *mut usize) -> QgStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return null("tensor") };
        if dim.is_null() {
            return null("dim");
        }
        *dim = t.0.dim();
        QgStatus::Ok
    })
}

/// Label of row `i` copied into `buf` (NUL-terminated).
///
/// # Safety
/// `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn qg_tensor_label(t: *const QgTensor, i: usize, buf: *mut c_char, len: usize) -> QgStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return null("tensor") };
        if buf.is_null() {
            return null("buf");
        }
        let Some(label) = t.0.labels.get(i) else {
            set_error(&format!("row {i} out of range"));
            return QgStatus::InvalidArgument;
        };
        let bytes = label.as_bytes();
        if bytes.len() + 1 > len {
            set_error(&format!("label needs {} bytes", bytes.len() + 1));
            return QgStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
        QgStatus::Ok
    })
}

/// Copies real and imaginary parts (row-major, `dim²` each).
///
/// # Safety
/// `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qg_tensor_values(t: *const QgTensor, re: *mut f64, im: *mut f64, len: usize) -> QgStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return null("tensor") };
        if re.is_null() || im.is_null() {
            return null("re/im");
        }
        let d = t.0.dim();
        if len < d * d {
            set_error(&format!("buffers need {} elements", d * d));
            return QgStatus::BufferTooSmall;
        }
        for i in 0..d {
            for j in 0..d {
                let z = t.0.get(i, j);
                *re.add(i * d + j) = z.re;
                *im.add(i * d + j) = z.im;
            }
        }
        QgStatus::Ok
    })
}

/// Scalar closed form by quantity name (`purity`, `entropy`, `det-metric`,
/// `scalar-curvature`, `phase-curvature:a,b`, `reduced-phase-curvature`).
///
/// # Safety
/// As [`qg_qgt`]; `quantity` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qg_closed_form_scalar(
    model: *const QgModel,
    quantity: *const c_char,
    point: *const f64,
    n_point: usize,
    qn: *const u32,
    n_qn: usize,
    value: *mut f64,
) -> QgStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return null("model") };
        if value.is_null() {
            return null("value");
        }
        let q: Quantity = match string(quantity).map(|s| s.parse()) {
            Ok(Ok(q)) => q,
            Ok(Err(e)) => return fail(&e),
            Err(s) => return s,
        };
        let (p, n) = match point_and_qn(point, n_point, qn, n_qn) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match m.0.oracle(&q, &p, &n) {
            Ok(c) => match c.scalar() {
                Some(v) => {
                    *value = v;
                    QgStatus::Ok
                }
                None => {
                    set_error(&format!("{q} is not a scalar"));
                    QgStatus::InvalidArgument
                }
            },
            Err(e) => fail(&e),
        }
    })
}

/// Scalar curvature of the closed-form parameter metric on the parameter
/// indices `coords` (2 or 3 of them), by finite differences.
///
/// # Safety
/// As [`qg_qgt`]; `coords` must hold `n_coords` elements.
#[no_mangle]
pub unsafe extern "C" fn qg_scalar_curvature(
    model: *const QgModel,
    point: *const f64,
    n_point: usize,
    qn: *const u32,
    n_qn: usize,
    coords: *const usize,
    n_coords: usize,
    value: *mut f64,
) -> QgStatus {
    guard(|| {
        let Some(m) = model.as_ref() else { return null("model") };
        if value.is_null() {
            return null("value");
        }
        let (p, n) = match point_and_qn(point, n_point, qn, n_qn) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let Some(c) = slice(coords, n_coords) else { return null("coords") };
        let r = m.0.check_point(&p).and_then(|_| m.0.check_quantum_numbers(&n)).and_then(|_| {
            let field = MetricField::closed_form(&m.0, &n, &p, c)?;
            let x: Vec<f64> = c.iter().map(|&i| p.get(i)).collect();
            ricci_scalar(&field, &x, &GeometryOptions::default())
        });
        match r {
            Ok((_, s)) => {
                *value = s;
                QgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Purity, von Neumann entropy and the smallest symplectic eigenvalue of a
/// `2N × 2N` covariance matrix in `(q.., p..)` order.
///
/// # Safety
/// `cov` must hold `4·modes²` doubles; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn qg_gaussian_entanglement(
    cov: *const f64,
    modes: usize,
    purity_out: *mut f64,
    entropy_out: *mut f64,
    min_nu_out: *mut f64,
) -> QgStatus {
    guard(|| {
        if purity_out.is_null() || entropy_out.is_null() || min_nu_out.is_null() {
            return null("out");
        }
        let d = 2 * modes;
        let Some(c) = slice(cov, d * d) else { return null("cov") };
        let r = CovarianceMatrix::new(DMatrix::from_row_slice(d, d, c)).and_then(|cov| {
            let nu = symplectic_eigenvalues(&cov)?;
            Ok((purity(&cov)?, von_neumann_entropy(&cov)?, nu[0]))
        });
        match r {
            Ok((mu, s, nu)) => {
                *purity_out = mu;
                *entropy_out = s;
                *min_nu_out = nu;
                QgStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
