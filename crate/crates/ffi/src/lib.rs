//! C ABI over the coopruin library.
//!
//! Every fallible function returns a [`CoopruinStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`coopruin_last_error_message`]. Graphs and rate fields
//! are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use coopruin::analytic::{self, RuinSpec, TwoPersonSpec};
use coopruin::dynamics::{Mu, SimParams};
use coopruin::error::Error;
use coopruin::field::{FieldSpec, RateField};
use coopruin::graph::{Graph, GraphKind, GraphMetrics};
use coopruin::montecarlo::{estimate_survival, replica_rng, Certification};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoopruinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutsideRegion = 3,
    Parse = 4,
    Io = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque graph handle.
pub struct CoopruinGraph(Graph);

/// Opaque earning-rate field handle.
pub struct CoopruinRates(RateField);

/// Monte Carlo estimate with a 95% interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoopruinEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub n_replicas: u64,
    pub n_censored: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CoopruinStatus {
    match err {
        Error::OutsideRegion { .. } => CoopruinStatus::OutsideRegion,
        Error::Parse(_) | Error::Json(_) => CoopruinStatus::Parse,
        Error::Io(_) => CoopruinStatus::Io,
        Error::Singular | Error::NoAliveVertices => CoopruinStatus::Internal,
        _ => CoopruinStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Lib(e)
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CoopruinStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoopruinStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as `{what}`"));
            CoopruinStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CoopruinStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers obtained from this library or valid
    // caller-owned storage, as documented on each function.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: as above; the pointee must be writable.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and nul-terminated per the function contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map_err(|e| Failure::Lib(Error::Parse(format!("`{what}` is not UTF-8: {e}"))))
}

fn mu_of(mu: f64) -> Result<Mu, Failure> {
    let m = if mu.is_infinite() && mu > 0.0 {
        Mu::Infinite
    } else {
        Mu::Finite(mu)
    };
    m.validate()?;
    Ok(m)
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn coopruin_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn coopruin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph from a spec such as `cycle:4`, `grid:3x3` or `file:path`.
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_graph_from_spec(spec: *const c_char, out: *mut *mut CoopruinGraph) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let kind: GraphKind = c_str(spec, "spec")?.parse()?;
        *out = Box::into_raw(Box::new(CoopruinGraph(Graph::build(&kind)?)));
        Ok(())
    })
}

/// Builds a graph on `n` vertices from `m` edges stored as `2m` endpoints.
///
/// # Safety
/// `edges` must point to `2 * m` readable values (may be NULL when `m` is 0);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_graph_from_edges(
    n: usize,
    edges: *const usize,
    m: usize,
    out: *mut *mut CoopruinGraph,
) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let flat: &[usize] = if m == 0 {
            &[]
        } else {
            non_null(edges, "edges")?;
            // SAFETY: non-null with 2m elements per the contract.
            unsafe { std::slice::from_raw_parts(edges, 2 * m) }
        };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        *out = Box::into_raw(Box::new(CoopruinGraph(Graph::from_edges(n, &pairs)?)));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from a `coopruin_graph_*` constructor and not be used
/// afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn coopruin_graph_free(graph: *mut CoopruinGraph) {
    if !graph.is_null() {
        // SAFETY: allocated by Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coopruin_graph_vertex_count(graph: *const CoopruinGraph) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.vertex_count())
}

/// `max_x sum_y d(x, y)`, the distance-sum term of the survival bound.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_graph_distance_sum_max(graph: *const CoopruinGraph, out: *mut u64) -> CoopruinStatus {
    guard(|| {
        let g = non_null(graph, "graph")?;
        *out_ptr(out, "out")? = g.0.distance_sum_max();
        Ok(())
    })
}

/// Rate field from `len` explicit rates.
///
/// # Safety
/// `rates` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_rates_new(rates: *const f64, len: usize, out: *mut *mut CoopruinRates) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        non_null(rates, "rates")?;
        // SAFETY: non-null with `len` elements per the contract.
        let v = unsafe { std::slice::from_raw_parts(rates, len) }.to_vec();
        *out = Box::into_raw(Box::new(CoopruinRates(RateField::new(v)?)));
        Ok(())
    })
}

/// `n` i.i.d. rates from a distribution spec (`uniform:0.4,1.2`, ...),
/// drawn from `seed`.
///
/// # Safety
/// `spec` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_rates_sample(
    spec: *const c_char,
    n: usize,
    seed: u64,
    out: *mut *mut CoopruinRates,
) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec: FieldSpec = c_str(spec, "spec")?.parse()?;
        let field = RateField::sample(&spec, n, &mut replica_rng(seed, u64::MAX))?;
        *out = Box::into_raw(Box::new(CoopruinRates(field)));
        Ok(())
    })
}

/// # Safety
/// `rates` must come from a `coopruin_rates_*` constructor and not be used
/// afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn coopruin_rates_free(rates: *mut CoopruinRates) {
    if !rates.is_null() {
        // SAFETY: allocated by Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(rates) });
    }
}

/// Number of rates, or 0 for NULL.
///
/// # Safety
/// `rates` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coopruin_rates_len(rates: *const CoopruinRates) -> usize {
    unsafe { rates.as_ref() }.map_or(0, |r| r.0.len())
}

/// Copies up to `cap` rates into `buf` and returns the total count.
///
/// # Safety
/// `rates` must be a live handle or NULL; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn coopruin_rates_copy(rates: *const CoopruinRates, buf: *mut f64, cap: usize) -> usize {
    let Some(r) = (unsafe { rates.as_ref() }) else {
        return 0;
    };
    let v = r.0.rates();
    if !buf.is_null() {
        let k = v.len().min(cap);
        // SAFETY: `buf` holds `cap >= k` doubles.
        unsafe { std::ptr::copy_nonoverlapping(v.as_ptr(), buf, k) };
    }
    v.len()
}

/// Mean rate.
///
/// # Safety
/// `rates` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_rates_phi_bar(rates: *const CoopruinRates, out: *mut f64) -> CoopruinStatus {
    guard(|| {
        let r = non_null(rates, "rates")?;
        *out_ptr(out, "out")? = r.0.phi_bar();
        Ok(())
    })
}

/// Probability that a walk stepping up at rate `phi_bar` and down at rate 1
/// from `start` reaches `upper` before `lower`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_ruin_two_sided(
    phi_bar: f64,
    start: i64,
    lower: i64,
    upper: i64,
    out: *mut f64,
) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = RuinSpec::new(phi_bar, start, lower, Some(upper));
        *out = if phi_bar == 1.0 {
            analytic::ruin_two_sided_numeric(&spec)?
        } else {
            analytic::ruin_two_sided(&spec)?
        };
        Ok(())
    })
}

/// Lower bound on global survival under perfect cooperation.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_survival_bound_infinite_mu(
    graph: *const CoopruinGraph,
    rates: *const CoopruinRates,
    c: u64,
    out: *mut f64,
) -> CoopruinStatus {
    guard(|| {
        let g = non_null(graph, "graph")?;
        let r = non_null(rates, "rates")?;
        let out = out_ptr(out, "out")?;
        *out = analytic::survival_bound_infinite_mu(&GraphMetrics::new(&g.0, &r.0)?, c);
        Ok(())
    })
}

/// Exact global survival without cooperation, `prod_z (1 - phi_z^-(c+1))^+`.
///
/// # Safety
/// `rates` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_survival_no_cooperation(
    rates: *const CoopruinRates,
    c: u64,
    out: *mut f64,
) -> CoopruinStatus {
    guard(|| {
        let r = non_null(rates, "rates")?;
        *out_ptr(out, "out")? = analytic::survival_no_cooperation(&r.0, c);
        Ok(())
    })
}

fn write_exits(
    phi_x: f64,
    phi_y: f64,
    c: u64,
    out: *mut f64,
    law: fn(&TwoPersonSpec) -> coopruin::error::Result<analytic::ExitProbs>,
) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = law(&TwoPersonSpec::new(phi_x, phi_y, c))?.ordered();
        // SAFETY: the caller provides four writable doubles.
        unsafe { std::ptr::copy_nonoverlapping(p.as_ptr(), out, 4) };
        Ok(())
    })
}

/// Closed-form two-person exit law at full cooperation, in the order
/// (0,-1), (-1,0), (1,-1), (-1,1).
///
/// # Safety
/// `out` must point to four writable doubles.
#[no_mangle]
pub unsafe extern "C" fn coopruin_two_person_exit_probs(phi_x: f64, phi_y: f64, c: u64, out: *mut f64) -> CoopruinStatus {
    write_exits(phi_x, phi_y, c, out, analytic::two_person_exit_probs)
}

/// Exit law from solving the two-person chain, same order as
/// [`coopruin_two_person_exit_probs`].
///
/// # Safety
/// `out` must point to four writable doubles.
#[no_mangle]
pub unsafe extern "C" fn coopruin_two_person_exact_exit_probs(
    phi_x: f64,
    phi_y: f64,
    c: u64,
    out: *mut f64,
) -> CoopruinStatus {
    write_exits(phi_x, phi_y, c, out, analytic::two_person_exact_exit_probs)
}

/// Expected two-person survivors; `mu` is 0 or `INFINITY`, `exact` selects
/// the solved chain over the closed form at full cooperation.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_two_person_expected_survivors(
    phi_x: f64,
    phi_y: f64,
    c: u64,
    mu: f64,
    exact: bool,
    out: *mut f64,
) -> CoopruinStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = TwoPersonSpec::new(phi_x, phi_y, c);
        let mu = mu_of(mu)?;
        *out = if exact && mu == Mu::Infinite {
            analytic::expected_survivors_exact(&spec)?
        } else {
            analytic::expected_survivors(&spec, mu)?
        };
        Ok(())
    })
}

/// Monte Carlo global survival with survival certificates. `mu` may be
/// `INFINITY`; `t_max` may be `INFINITY` when every replica is decided.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn coopruin_estimate_survival(
    graph: *const CoopruinGraph,
    rates: *const CoopruinRates,
    mu: f64,
    c: u64,
    t_max: f64,
    replicas: u64,
    seed: u64,
    out: *mut CoopruinEstimate,
) -> CoopruinStatus {
    guard(|| {
        let g = non_null(graph, "graph")?;
        let r = non_null(rates, "rates")?;
        let out = out_ptr(out, "out")?;
        let params = SimParams::new(mu_of(mu)?, c, t_max).with_seed(seed);
        params.validate()?;
        let est = estimate_survival(&g.0, &r.0, &params, &Certification::default(), replicas)?;
        *out = CoopruinEstimate {
            point: est.point,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            std_error: est.std_error,
            n_replicas: est.n_replicas,
            n_censored: est.n_censored,
        };
        Ok(())
    })
}
