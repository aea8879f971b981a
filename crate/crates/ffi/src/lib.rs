//! C ABI over the `pooltest` library.
//!
//! Designs, infection vectors and outcome vectors cross the boundary as
//! opaque handles created by `pt_*` constructors and released with the
//! matching `pt_*_free`. Every fallible call returns a [`PtStatus`]; the
//! message of the most recent failure on the calling thread is available
//! from [`pt_last_error_message`]. Panics never unwind into C.
//!
//! Seeds follow the CLI: a design built with seed `s` and an infection vector
//! drawn with seed `s` match `pooltest design-stats --seed s` and
//! `pooltest instance --seed s`.
//!
//! # Safety
//!
//! Every pointer argument must be null or valid for the access its type
//! implies: handles must come from this library and not be freed yet, input
//! arrays must hold the stated number of elements, and output pointers must
//! be writable. Null pointers are reported as `NullPointer`, never
//! dereferenced.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pooltest::adaptive::{adaptive_delta, adaptive_gamma, TestOracle};
use pooltest::design::{
    build_delta_regular, build_gamma_auto, build_gamma_config, build_gamma_matching, design_stats,
    PoolingDesign,
};
use pooltest::model::{compute_outcomes, draw_uniform_k_sparse, InfectionVector, OutcomeVector};
use pooltest::rng::{stream_rng, Stream};
use pooltest::thresholds::ThresholdSet;
use pooltest::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtStatus {
    Ok = 0,
    /// Invalid argument value.
    Parameter = 1,
    /// `m * gamma` not divisible by `n`; the message names the nearest valid `m`.
    Divisibility = 2,
    /// Internal consistency check failed.
    Integrity = 3,
    /// Input too large for exhaustive enumeration.
    Capacity = 4,
    Io = 5,
    NullPointer = 6,
    /// Output buffer shorter than the result; the required length was still written.
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtAlgorithm {
    Comp = 0,
    Dd = 1,
}

/// Opaque pooling design.
pub struct PtDesign(PoolingDesign);

/// Opaque infection vector.
pub struct PtInfection(InfectionVector);

/// Opaque test outcome vector.
pub struct PtOutcomes(OutcomeVector);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PtDesignStats {
    pub n: usize,
    pub m: usize,
    pub min_test_degree: usize,
    pub max_test_degree: usize,
    pub mean_test_degree: f64,
    pub max_item_degree: usize,
    pub multi_edge_count: usize,
    pub untested: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PtAdaptiveReport {
    pub tests_used: usize,
    pub max_tests_per_item: usize,
    pub max_test_size: usize,
    pub declared_count: usize,
    /// Declared set equals the drawn truth.
    pub success: bool,
}

/// Threshold values; regimes whose constraint was not given are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PtThresholds {
    pub theta: f64,
    pub m_inf_delta: f64,
    pub m_dd_delta: f64,
    pub m_ada_delta: f64,
    pub m_inf_gamma: f64,
    pub m_dd_gamma: f64,
    pub matching_bound: f64,
    pub m_ada_gamma: f64,
    pub delta_dd: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = clean);
}

fn status_of(error: &Error) -> PtStatus {
    match error {
        Error::Parameter(_) => PtStatus::Parameter,
        Error::Divisibility { .. } => PtStatus::Divisibility,
        Error::Integrity(_) => PtStatus::Integrity,
        Error::Capacity(_) => PtStatus::Capacity,
        Error::Io { .. } => PtStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Status(PtStatus, &'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(PtStatus::NullPointer, "null pointer argument")
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PtStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {msg}"));
            PtStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread; empty when none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Output schema version shared with the CLI.
#[no_mangle]
pub extern "C" fn pt_schema_version() -> u32 {
    pooltest::SCHEMA_VERSION
}

#[no_mangle]
pub unsafe extern "C" fn pt_design_delta_regular(
    n: usize,
    m: usize,
    delta: usize,
    seed: u64,
    out: *mut *mut PtDesign,
) -> PtStatus {
    guard(|| {
        let d = build_delta_regular(n, m, delta, &mut stream_rng(seed, Stream::Design))?;
        write_out(out, Box::into_raw(Box::new(PtDesign(d))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pt_design_gamma_config(
    n: usize,
    m: usize,
    gamma: usize,
    seed: u64,
    out: *mut *mut PtDesign,
) -> PtStatus {
    guard(|| {
        let d = build_gamma_config(n, m, gamma, &mut stream_rng(seed, Stream::Design))?;
        write_out(out, Box::into_raw(Box::new(PtDesign(d))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pt_design_gamma_matching(
    n: usize,
    m: usize,
    gamma: usize,
    seed: u64,
    out: *mut *mut PtDesign,
) -> PtStatus {
    guard(|| {
        let d = build_gamma_matching(n, m, gamma, &mut stream_rng(seed, Stream::Design))?;
        write_out(out, Box::into_raw(Box::new(PtDesign(d))))
    })
}

/// Configuration design for `theta >= 0.5`, matching design below.
#[no_mangle]
pub unsafe extern "C" fn pt_design_gamma_auto(
    n: usize,
    m: usize,
    gamma: usize,
    theta: f64,
    seed: u64,
    out: *mut *mut PtDesign,
) -> PtStatus {
    guard(|| {
        let d = build_gamma_auto(n, m, gamma, theta, &mut stream_rng(seed, Stream::Design))?;
        write_out(out, Box::into_raw(Box::new(PtDesign(d))))
    })
}

/// Explicit design in CSR form: test `a` holds
/// `members[offsets[a] .. offsets[a + 1]]`; `offsets` has `m + 1` entries.
#[no_mangle]
pub unsafe extern "C" fn pt_design_from_tests(
    n: usize,
    m: usize,
    offsets: *const usize,
    members: *const usize,
    out: *mut *mut PtDesign,
) -> PtStatus {
    guard(|| {
        let offsets = slice(offsets, m + 1)?;
        let total = *offsets.last().unwrap_or(&0);
        if offsets.first() != Some(&0) || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Failure::Status(PtStatus::Parameter, "offsets must start at 0 and be non-decreasing"));
        }
        let members = slice(members, total)?;
        let tests: Vec<Vec<usize>> = offsets.windows(2).map(|w| members[w[0]..w[1]].to_vec()).collect();
        let d = PoolingDesign::from_tests(n, &tests)?;
        write_out(out, Box::into_raw(Box::new(PtDesign(d))))
    })
}

/// Releases a design; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pt_design_free(design: *mut PtDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pt_design_stats(design: *const PtDesign, out: *mut PtDesignStats) -> PtStatus {
    guard(|| {
        let d = &borrow(design)?.0;
        let s = design_stats(d);
        write_out(
            out,
            PtDesignStats {
                n: d.n(),
                m: d.m(),
                min_test_degree: s.min_test_degree,
                max_test_degree: s.max_test_degree,
                mean_test_degree: s.mean_test_degree,
                max_item_degree: d.max_item_degree(),
                multi_edge_count: s.multi_edge_count,
                untested: d.untested_count(),
            },
        )
    })
}

/// Borrows the sorted member list of `test` (multi-edges repeated). The
/// pointer is valid until the design is freed.
#[no_mangle]
pub unsafe extern "C" fn pt_design_test_members(
    design: *const PtDesign,
    test: usize,
    members: *mut *const usize,
    len: *mut usize,
) -> PtStatus {
    guard(|| {
        let d = &borrow(design)?.0;
        if test >= d.m() {
            return Err(Failure::Status(PtStatus::Parameter, "test index out of range"));
        }
        let items = d.items_of(test);
        write_out(members, items.as_ptr())?;
        write_out(len, items.len())
    })
}

/// Uniform weight-`k` infection vector.
#[no_mangle]
pub unsafe extern "C" fn pt_infection_uniform(n: usize, k: usize, seed: u64, out: *mut *mut PtInfection) -> PtStatus {
    guard(|| {
        let sigma = draw_uniform_k_sparse(n, k, &mut stream_rng(seed, Stream::Infection))?;
        write_out(out, Box::into_raw(Box::new(PtInfection(sigma))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pt_infection_from_list(
    n: usize,
    infected: *const usize,
    len: usize,
    out: *mut *mut PtInfection,
) -> PtStatus {
    guard(|| {
        let sigma = InfectionVector::from_infected(n, slice(infected, len)?)?;
        write_out(out, Box::into_raw(Box::new(PtInfection(sigma))))
    })
}

/// Copies the ascending infected indices; see [`pt_decode`] for the buffer protocol.
#[no_mangle]
pub unsafe extern "C" fn pt_infection_get(
    sigma: *const PtInfection,
    buffer: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> PtStatus {
    guard(|| copy_out(&borrow(sigma)?.0.infected(), buffer, capacity, count))
}

#[no_mangle]
pub unsafe extern "C" fn pt_infection_free(sigma: *mut PtInfection) {
    if !sigma.is_null() {
        drop(Box::from_raw(sigma));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pt_outcomes_compute(
    design: *const PtDesign,
    sigma: *const PtInfection,
    out: *mut *mut PtOutcomes,
) -> PtStatus {
    guard(|| {
        let outcomes = compute_outcomes(&borrow(design)?.0, &borrow(sigma)?.0)?;
        write_out(out, Box::into_raw(Box::new(PtOutcomes(outcomes))))
    })
}

/// Builds an outcome vector from `m` bytes, non-zero meaning positive.
#[no_mangle]
pub unsafe extern "C" fn pt_outcomes_from_bytes(results: *const u8, m: usize, out: *mut *mut PtOutcomes) -> PtStatus {
    guard(|| {
        let bits = slice(results, m)?.iter().map(|&b| b != 0).collect();
        write_out(out, Box::into_raw(Box::new(PtOutcomes(OutcomeVector::from_results(bits)))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pt_outcomes_len(outcomes: *const PtOutcomes, m: *mut usize) -> PtStatus {
    guard(|| write_out(m, borrow(outcomes)?.0.m()))
}

#[no_mangle]
pub unsafe extern "C" fn pt_outcomes_get(outcomes: *const PtOutcomes, test: usize, positive: *mut bool) -> PtStatus {
    guard(|| {
        let o = &borrow(outcomes)?.0;
        if test >= o.m() {
            return Err(Failure::Status(PtStatus::Parameter, "test index out of range"));
        }
        write_out(positive, o.is_positive(test))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pt_outcomes_free(outcomes: *mut PtOutcomes) {
    if !outcomes.is_null() {
        drop(Box::from_raw(outcomes));
    }
}

unsafe fn copy_out(values: &[usize], buffer: *mut usize, capacity: usize, count: *mut usize) -> Result<(), Failure> {
    write_out(count, values.len())?;
    if values.len() > capacity {
        return Err(Failure::Status(PtStatus::BufferTooSmall, "buffer shorter than the result"));
    }
    if !values.is_empty() {
        if buffer.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
    }
    Ok(())
}

/// Decodes `outcomes` and copies the declared-infected indices into
/// `buffer`. `*count` always receives the full result length; when it
/// exceeds `capacity` nothing is copied and `BufferTooSmall` is returned.
#[no_mangle]
pub unsafe extern "C" fn pt_decode(
    design: *const PtDesign,
    outcomes: *const PtOutcomes,
    algorithm: PtAlgorithm,
    buffer: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> PtStatus {
    guard(|| {
        let (d, o) = (&borrow(design)?.0, &borrow(outcomes)?.0);
        let result = match algorithm {
            PtAlgorithm::Comp => pooltest::comp(d, o)?,
            PtAlgorithm::Dd => pooltest::dd(d, o)?,
        };
        copy_out(&result.declared_infected, buffer, capacity, count)
    })
}

/// Exact number of weight-`k` vectors consistent with `outcomes`.
#[no_mangle]
pub unsafe extern "C" fn pt_count_consistent(
    design: *const PtDesign,
    outcomes: *const PtOutcomes,
    k: usize,
    out: *mut u64,
) -> PtStatus {
    guard(|| {
        let z = pooltest::count_consistent(&borrow(design)?.0, &borrow(outcomes)?.0, k)?;
        write_out(out, z)
    })
}

fn report(tests_used: usize, oracle: &TestOracle, r: &pooltest::AdaptiveReport) -> PtAdaptiveReport {
    PtAdaptiveReport {
        tests_used,
        max_tests_per_item: r.max_tests_per_item,
        max_test_size: r.max_test_size,
        declared_count: r.declared_infected.len(),
        success: r.matches(oracle.truth()),
    }
}

/// Draws a uniform weight-`k` truth from `seed` and recovers it with the
/// Δ-divisible splitting strategy.
#[no_mangle]
pub unsafe extern "C" fn pt_adaptive_delta(
    n: usize,
    k: usize,
    delta: usize,
    seed: u64,
    out: *mut PtAdaptiveReport,
) -> PtStatus {
    guard(|| {
        let sigma = draw_uniform_k_sparse(n, k, &mut stream_rng(seed, Stream::Infection))?;
        let mut oracle = TestOracle::new(sigma);
        let r = adaptive_delta(n, k, delta, &mut oracle)?;
        write_out(out, report(r.tests_used, &oracle, &r))
    })
}

/// As [`pt_adaptive_delta`] for tests of at most `gamma` individuals.
#[no_mangle]
pub unsafe extern "C" fn pt_adaptive_gamma(
    n: usize,
    k: usize,
    gamma: usize,
    seed: u64,
    out: *mut PtAdaptiveReport,
) -> PtStatus {
    guard(|| {
        let sigma = draw_uniform_k_sparse(n, k, &mut stream_rng(seed, Stream::Infection))?;
        let mut oracle = TestOracle::new(sigma);
        let r = adaptive_gamma(n, gamma, &mut oracle, &mut stream_rng(seed, Stream::Grouping))?;
        write_out(out, report(r.tests_used, &oracle, &r))
    })
}

/// Evaluates every threshold at `(n, k)`. Pass a non-positive `delta` or
/// `gamma` to skip that regime, and NaN `theta` to derive it from `k`.
#[no_mangle]
pub unsafe extern "C" fn pt_thresholds(
    n: f64,
    k: f64,
    theta: f64,
    delta: f64,
    gamma: f64,
    out: *mut PtThresholds,
) -> PtStatus {
    guard(|| {
        let pick = |v: f64| (v > 0.0).then_some(v);
        let t = ThresholdSet::evaluate(n, k, (!theta.is_nan()).then_some(theta), pick(delta), pick(gamma))?;
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        write_out(
            out,
            PtThresholds {
                theta: t.theta,
                m_inf_delta: nan(t.m_inf_delta),
                m_dd_delta: nan(t.m_dd_delta),
                m_ada_delta: nan(t.m_ada_delta),
                m_inf_gamma: nan(t.m_inf_gamma),
                m_dd_gamma: nan(t.m_dd_gamma),
                matching_bound: nan(t.matching_bound),
                m_ada_gamma: nan(t.m_ada_gamma),
                delta_dd: t.delta_dd,
            },
        )
    })
}

/// Counting bound on the success probability of any design with `m` tests
/// and at most `delta` tests per individual.
#[no_mangle]
pub unsafe extern "C" fn pt_success_upper_bound(n: u64, k: u64, m: u64, delta: u64, out: *mut f64) -> PtStatus {
    guard(|| write_out(out, pooltest::success_upper_bound(n, k, m, delta)))
}
