//! C interface to `msgr`.
//!
//! Metrics and reports are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns a
//! [`MsgrStatus`]; on failure `msgr_last_error_message` describes the error
//! (per thread, valid until the next failing call on that thread). Panics
//! never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use msgr::catalog::{self, MetricSpec};
use msgr::report::{self, CheckConfig, ConstraintReport, Format, Model};
use msgr::{eh, ep, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsgrStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed request: bad metric text, unknown name, bad parameters.
    InvalidArgument = 2,
    /// Numeric domain failure: singular or out-of-domain point.
    Domain = 3,
    /// A bug inside the library (caught panic).
    Internal = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsgrModel {
    Eh = 0,
    Ep = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsgrFormat {
    Json = 0,
    Csv = 1,
}

/// A loaded metric.
pub struct MsgrMetric {
    spec: MetricSpec,
    source: String,
}

/// The result of a check run.
pub struct MsgrReport {
    report: ConstraintReport,
    names: Vec<CString>,
}

/// One family of a report. `name` is owned by the report.
#[repr(C)]
pub struct MsgrFamilyRecord {
    pub name: *const c_char,
    pub points: usize,
    pub max_resid: f64,
    pub mean_resid: f64,
    pub tol: f64,
    pub pass: c_int,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(MsgrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numeric() { MsgrStatus::Domain } else { MsgrStatus::InvalidArgument };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MsgrStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MsgrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsgrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            MsgrStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(MsgrStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn point_arg(x: *const f64) -> Result<[f64; 4], Failure> {
    if x.is_null() {
        return Err(null("x"));
    }
    Ok(std::array::from_fn(|i| *x.add(i)))
}

unsafe fn metric_arg<'a>(m: *const MsgrMetric) -> Result<&'a MsgrMetric, Failure> {
    m.as_ref().ok_or_else(|| null("metric"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn msgr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL.
#[no_mangle]
pub extern "C" fn msgr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Load a metric from a builtin name (`name` or `name:key=value,...`) or a
/// metric file path.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_metric_new(spec: *const c_char, out: *mut *mut MsgrMetric) -> MsgrStatus {
    guard(|| {
        let arg = str_arg(spec, "spec")?;
        let m = MsgrMetric { spec: catalog::resolve(arg)?, source: arg.to_string() };
        write_out(out, Box::into_raw(Box::new(m)))
    })
}

/// Load a metric from the text of a metric file.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_metric_from_text(text: *const c_char, out: *mut *mut MsgrMetric) -> MsgrStatus {
    guard(|| {
        let spec = catalog::parse_metric_file(str_arg(text, "text")?)?;
        let source = spec.name.clone();
        write_out(out, Box::into_raw(Box::new(MsgrMetric { spec, source })))
    })
}

/// # Safety
/// `m` must come from `msgr_metric_new`/`msgr_metric_from_text` and not be
/// used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn msgr_metric_free(m: *mut MsgrMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Metric components at `x` (4 values) into `g` (16 values, row-major).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn msgr_metric_at(m: *const MsgrMetric, x: *const f64, g: *mut f64) -> MsgrStatus {
    guard(|| {
        let v = metric_arg(m)?.spec.metric_at(point_arg(x)?)?;
        if g.is_null() {
            return Err(null("g"));
        }
        for (i, c) in v.iter().flatten().enumerate() {
            g.add(i).write(*c);
        }
        Ok(())
    })
}

/// `L = ϱR` of the metric at `x`.
///
/// # Safety
/// `x` must point to 4 values, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_eh_lagrangian(m: *const MsgrMetric, x: *const f64, out: *mut f64) -> MsgrStatus {
    guard(|| {
        let p = metric_arg(m)?.spec.eh_point_at(point_arg(x)?)?;
        write_out(out, eh::lagrangian_eh(&p))
    })
}

/// The 10 ordered components `L^{αβ}` (α ≤ β) at `x`.
///
/// # Safety
/// `x` must point to 4 values, `out` to 10 writable values.
#[no_mangle]
pub unsafe extern "C" fn msgr_eh_constraint(m: *const MsgrMetric, x: *const f64, out: *mut f64) -> MsgrStatus {
    guard(|| {
        let p = metric_arg(m)?.spec.eh_point_at(point_arg(x)?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, v) in eh::constraint_einstein(&p).iter().enumerate() {
            out.add(i).write(*v);
        }
        Ok(())
    })
}

/// Max-norm of the Einstein–Hilbert field-equation contraction at `x`.
///
/// # Safety
/// `x` must point to 4 values, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_eh_field_equation_residual(
    m: *const MsgrMetric,
    x: *const f64,
    out: *mut f64,
) -> MsgrStatus {
    guard(|| {
        let p = metric_arg(m)?.spec.eh_point_at(point_arg(x)?)?;
        write_out(out, eh::verify_field_equation(&p)?)
    })
}

/// `L_EP` of the metric and its connection at `x`.
///
/// # Safety
/// `x` must point to 4 values, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_ep_lagrangian(m: *const MsgrMetric, x: *const f64, out: *mut f64) -> MsgrStatus {
    guard(|| {
        let p = metric_arg(m)?.spec.ep_point_at(point_arg(x)?)?;
        write_out(out, ep::lagrangian_ep(&p))
    })
}

/// Max-norm of the Einstein–Palatini field-equation contraction at `x`.
///
/// # Safety
/// `x` must point to 4 values, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_ep_field_equation_residual(
    m: *const MsgrMetric,
    x: *const f64,
    out: *mut f64,
) -> MsgrStatus {
    guard(|| {
        let p = metric_arg(m)?.spec.ep_point_at(point_arg(x)?)?;
        write_out(out, ep::verify_field_equation_ep(&p)?)
    })
}

/// Run every check family of `model` on `points` seeded samples. `threads`
/// 0 uses the default pool size.
///
/// # Safety
/// `m` must be a live metric handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_check(
    m: *const MsgrMetric,
    model: MsgrModel,
    points: usize,
    seed: u64,
    threads: usize,
    out: *mut *mut MsgrReport,
) -> MsgrStatus {
    guard(|| {
        let metric = metric_arg(m)?;
        let model = match model {
            MsgrModel::Eh => Model::Eh,
            MsgrModel::Ep => Model::Ep,
        };
        let mut cfg = CheckConfig::new(model, metric.spec.clone(), &metric.source);
        cfg.points = points;
        cfg.seed = seed;
        cfg.threads = (threads > 0).then_some(threads);
        let r = report::run_check(&cfg)?;
        let names =
            r.families.iter().map(|f| CString::new(f.family.as_str()).expect("family names have no NUL")).collect();
        write_out(out, Box::into_raw(Box::new(MsgrReport { report: r, names })))
    })
}

/// 1 if every family passed, 0 if not, -1 for NULL.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn msgr_report_passed(r: *const MsgrReport) -> c_int {
    r.as_ref().map_or(-1, |r| c_int::from(r.report.pass))
}

/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn msgr_report_family_count(r: *const MsgrReport) -> usize {
    r.as_ref().map_or(0, |r| r.report.families.len())
}

/// Family `index` of the report. The name stays valid while `r` lives.
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_report_family(
    r: *const MsgrReport,
    index: usize,
    out: *mut MsgrFamilyRecord,
) -> MsgrStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        let f = r
            .report
            .families
            .get(index)
            .ok_or_else(|| Failure(MsgrStatus::InvalidArgument, format!("family index {index} out of range")))?;
        write_out(
            out,
            MsgrFamilyRecord {
                name: r.names[index].as_ptr(),
                points: f.points,
                max_resid: f.max_resid,
                mean_resid: f.mean_resid,
                tol: f.tol,
                pass: c_int::from(f.pass),
            },
        )
    })
}

/// Serialize the report. The string is released with `msgr_string_free`.
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msgr_report_render(
    r: *const MsgrReport,
    format: MsgrFormat,
    out: *mut *mut c_char,
) -> MsgrStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        let format = match format {
            MsgrFormat::Json => Format::Json,
            MsgrFormat::Csv => Format::Csv,
        };
        let text = CString::new(report::emit(&r.report, format)).expect("reports have no NUL");
        write_out(out, text.into_raw())
    })
}

/// # Safety
/// `s` must come from `msgr_report_render` and not be used afterwards.
/// NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn msgr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `r` must come from `msgr_check` and not be used afterwards. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn msgr_report_free(r: *mut MsgrReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
