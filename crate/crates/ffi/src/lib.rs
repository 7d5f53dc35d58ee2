//! C ABI for the kpz-tails library.
//!
//! Every function returns a [`KpzStatus`]; results go through out-pointers.
//! On failure [`kpz_last_error`] describes the error for the calling thread.
//! Panics never cross the boundary: they are reported as `KPZ_PANIC`.

use kpz_tails::brownian::Grid;
use kpz_tails::estimators::{
    analytic_avoidance_lower_bound, analytic_avoidance_upper_bound, mc_avoidance, AvoidanceSpec, LowerBoundVariant,
};
use kpz_tails::geometry::{classify, one_point_log_rate, tangency_points, two_point_log_rate, CaseLabel, TwoPointSpec};
use kpz_tails::gibbs::{initial_ordered_state, Chain, ChainConfig, Hamiltonian};
use kpz_tails::{Error, Method, RngHandle, TailEstimate};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpzStatus {
    KpzOk = 0,
    /// A required pointer argument was null.
    KpzNullPointer = 1,
    /// An argument is outside the domain of the operation.
    KpzDomain = 2,
    /// The sampler's constraint set looks empty.
    KpzInfeasible = 3,
    /// Rejection sampling would almost never accept.
    KpzLowAcceptance = 4,
    KpzUsage = 5,
    KpzIo = 6,
    KpzPanic = 7,
}

/// Case of a two-point hull.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpzCase {
    KpzTwoExtreme = 0,
    KpzInfinitelyMany = 1,
    KpzOneExtreme = 2,
}

/// A log-probability estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KpzEstimate {
    pub log_p: f64,
    /// Standard error of `log_p`; infinite when `log_p` is `-inf`.
    pub stderr_log: f64,
    pub n: u64,
    pub hits: u64,
    /// One-sided 95% upper bound on `log_p`.
    pub upper_log: f64,
}

impl From<TailEstimate> for KpzEstimate {
    fn from(e: TailEstimate) -> Self {
        Self { log_p: e.log_p, stderr_log: e.stderr_log, n: e.n, hits: e.hits, upper_log: e.upper_log }
    }
}

/// Opaque Gibbs chain over a non-intersecting line ensemble.
pub struct KpzChain {
    chain: Chain,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> KpzStatus {
    match err {
        Error::Domain(_) => KpzStatus::KpzDomain,
        Error::Feasibility(_) => KpzStatus::KpzInfeasible,
        Error::LowAcceptance { .. } => KpzStatus::KpzLowAcceptance,
        Error::Usage(_) => KpzStatus::KpzUsage,
        Error::Io(_) | Error::Json(_) => KpzStatus::KpzIo,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> KpzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KpzStatus::KpzOk,
        Ok(Err(err)) => {
            let s = status_of(&err);
            set_error(err.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            KpzStatus::KpzPanic
        }
    }
}

fn null_error() -> Error {
    Error::Usage("null pointer argument".into())
}

/// Writes `value` through `out`, failing on null.
///
/// # Safety
/// `out` must be null or valid for writes.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Error> {
    match unsafe { out.as_mut() } {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(null_error()),
    }
}

fn check_nulls(ptrs: &[bool]) -> Option<KpzStatus> {
    if ptrs.iter().any(|&is_null| is_null) {
        set_error("null pointer argument".into());
        Some(KpzStatus::KpzNullPointer)
    } else {
        None
    }
}

/// Message for the last failure on this thread. Valid until the next call
/// on the same thread; never null.
#[no_mangle]
pub extern "C" fn kpz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Leading-order one-point rate `(4/3) theta^{3/2}`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_one_point_log_rate(theta: f64, out: *mut f64) -> KpzStatus {
    if let Some(s) = check_nulls(&[out.is_null()]) {
        return s;
    }
    guard(|| unsafe { put(out, one_point_log_rate(theta)?) })
}

/// Two-point rate for heights `a * theta`, `b * theta` at `-sqrt(theta)`, `sqrt(theta)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_two_point_log_rate(theta: f64, a: f64, b: f64, out: *mut f64) -> KpzStatus {
    if let Some(s) = check_nulls(&[out.is_null()]) {
        return s;
    }
    guard(|| unsafe { put(out, two_point_log_rate(&TwoPointSpec::new(theta, a, b)?)) })
}

/// Hull case of a two-point spec.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_classify(theta: f64, a: f64, b: f64, out: *mut KpzCase) -> KpzStatus {
    if let Some(s) = check_nulls(&[out.is_null()]) {
        return s;
    }
    guard(|| {
        let case = match classify(&TwoPointSpec::new(theta, a, b)?) {
            CaseLabel::TwoExtreme => KpzCase::KpzTwoExtreme,
            CaseLabel::InfinitelyMany => KpzCase::KpzInfinitelyMany,
            CaseLabel::OneExtreme => KpzCase::KpzOneExtreme,
        };
        unsafe { put(out, case) }
    })
}

/// Points where the outer tangents touch the parabola.
///
/// # Safety
/// `left` and `right` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_tangency_points(theta: f64, a: f64, b: f64, left: *mut f64, right: *mut f64) -> KpzStatus {
    if let Some(s) = check_nulls(&[left.is_null(), right.is_null()]) {
        return s;
    }
    guard(|| {
        let (l, r) = tangency_points(&TwoPointSpec::new(theta, a, b)?);
        unsafe {
            put(left, l)?;
            put(right, r)
        }
    })
}

/// Analytic lower bound on the log avoidance probability over `[z1, z2]`.
/// A positive `mesh_epsilon` selects the mesh bound; otherwise the closed
/// form. `flagged` is set when the bound lies outside its proved range and
/// may be null.
///
/// # Safety
/// `out` must be valid for writes; `flagged` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_avoidance_lower_bound(
    z1: f64,
    z2: f64,
    mesh_epsilon: f64,
    out: *mut f64,
    flagged: *mut bool,
) -> KpzStatus {
    if let Some(s) = check_nulls(&[out.is_null()]) {
        return s;
    }
    guard(|| {
        let variant =
            if mesh_epsilon > 0.0 { LowerBoundVariant::Mesh { epsilon: mesh_epsilon } } else { LowerBoundVariant::ClosedForm };
        let bound = analytic_avoidance_lower_bound(z1, z2, variant)?;
        unsafe {
            put(out, bound.log_p)?;
            if !flagged.is_null() {
                put(flagged, bound.flagged)?;
            }
        }
        Ok(())
    })
}

/// Analytic upper bound on the log avoidance probability over `[-z, z]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_avoidance_upper_bound(z: f64, out: *mut f64) -> KpzStatus {
    if let Some(s) = check_nulls(&[out.is_null()]) {
        return s;
    }
    guard(|| unsafe { put(out, analytic_avoidance_upper_bound(z)?) })
}

/// Monte Carlo log probability that a rate-2 bridge from `1 - z^2` to
/// `1 - z^2` over `[-z, z]` stays above `-x^2`. `tilted` selects the
/// resampling estimator; otherwise plain counting. Results depend only on
/// the arguments.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_mc_avoidance(
    z: f64,
    grid_step: f64,
    n: u64,
    seed: u64,
    tilted: bool,
    out: *mut KpzEstimate,
) -> KpzStatus {
    if let Some(s) = check_nulls(&[out.is_null()]) {
        return s;
    }
    guard(|| {
        let spec = AvoidanceSpec::symmetric(z)?;
        let method = if tilted { Method::Tilted } else { Method::Naive };
        let est = mc_avoidance(&spec, grid_step, n, &RngHandle::new(seed), method)?;
        unsafe { put(out, est.into()) }
    })
}

/// Creates a chain of `k` ordered curves on `[z1, z2]` with entrance values
/// `left[0..k]` and exit values `right[0..k]`, both strictly decreasing.
/// `t > 0` selects the soft interaction at that time; `t == 0` hard
/// non-intersection. Free the result with [`kpz_chain_free`].
///
/// # Safety
/// `left` and `right` must point to `k` readable values; `out` must be
/// valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn kpz_chain_new(
    k: usize,
    left: *const f64,
    right: *const f64,
    z1: f64,
    z2: f64,
    grid_step: f64,
    t: f64,
    sup_bound: f64,
    seed: u64,
    out: *mut *mut KpzChain,
) -> KpzStatus {
    if let Some(s) = check_nulls(&[left.is_null(), right.is_null(), out.is_null()]) {
        return s;
    }
    unsafe { *out = ptr::null_mut() };
    guard(|| {
        if k == 0 {
            return Err(Error::Domain("need at least one curve".into()));
        }
        let (w, z) = unsafe { (std::slice::from_raw_parts(left, k), std::slice::from_raw_parts(right, k)) };
        let grid = Grid::uniform(z1, z2, grid_step)?;
        let state = initial_ordered_state(w, z, &grid, None)?;
        let h = if t == 0.0 { Hamiltonian::Zero } else { Hamiltonian::finite(t)? };
        let chain = Chain::new(state, h, ChainConfig::new(sup_bound)?, &RngHandle::new(seed))?;
        unsafe { put(out, Box::into_raw(Box::new(KpzChain { chain }))) }
    })
}

/// Advances the chain by `sweeps` full sweeps.
///
/// # Safety
/// `chain` must come from [`kpz_chain_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn kpz_chain_run(chain: *mut KpzChain, sweeps: usize) -> KpzStatus {
    if let Some(s) = check_nulls(&[chain.is_null()]) {
        return s;
    }
    let chain = unsafe { &mut *chain };
    guard(|| chain.chain.run(sweeps))
}

/// Number of grid points per curve.
///
/// # Safety
/// `chain` must come from [`kpz_chain_new`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_chain_grid_len(chain: *const KpzChain, out: *mut usize) -> KpzStatus {
    if let Some(s) = check_nulls(&[chain.is_null(), out.is_null()]) {
        return s;
    }
    let chain = unsafe { &*chain };
    guard(|| unsafe { put(out, chain.chain.state().grid().len()) })
}

/// Fraction of accepted proposals so far.
///
/// # Safety
/// `chain` must come from [`kpz_chain_new`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_chain_acceptance_rate(chain: *const KpzChain, out: *mut f64) -> KpzStatus {
    if let Some(s) = check_nulls(&[chain.is_null(), out.is_null()]) {
        return s;
    }
    let chain = unsafe { &*chain };
    guard(|| unsafe { put(out, chain.chain.acceptance_rate()) })
}

/// Copies curve `index` (0 is the top) into `buf`, which must hold exactly
/// the grid length.
///
/// # Safety
/// `chain` must come from [`kpz_chain_new`]; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kpz_chain_curve(chain: *const KpzChain, index: usize, buf: *mut f64, len: usize) -> KpzStatus {
    if let Some(s) = check_nulls(&[chain.is_null(), buf.is_null()]) {
        return s;
    }
    let chain = unsafe { &*chain };
    guard(|| {
        let state = chain.chain.state();
        if index >= state.k() {
            return Err(Error::Domain(format!("curve {index} out of range for {} curves", state.k())));
        }
        let curve = state.curve(index);
        if len != curve.len() {
            return Err(Error::Domain(format!("buffer holds {len} values, curve has {}", curve.len())));
        }
        unsafe { std::slice::from_raw_parts_mut(buf, len) }.copy_from_slice(curve);
        Ok(())
    })
}

/// Releases a chain. Null is ignored.
///
/// # Safety
/// `chain` must be null or come from [`kpz_chain_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn kpz_chain_free(chain: *mut KpzChain) {
    if !chain.is_null() {
        drop(unsafe { Box::from_raw(chain) });
    }
}
