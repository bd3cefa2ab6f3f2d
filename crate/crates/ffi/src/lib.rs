//! C ABI over `repeater-core`.
//!
//! Every fallible call returns an [`RpStatus`]; on failure
//! [`rp_last_error_message`] describes the error. Handles are opaque and must
//! be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use repeater_core::analytic::{cognitive_f, rate_lower_bound_cognitive, rate_lower_bound_doubling, select_i0};
use repeater_core::ctmc::exact_rate;
use repeater_core::model::{ChainConfig, FullMemoryRule, MemoryAllocation, Protocol};
use repeater_core::sim::{simulate, Horizon, SimConfig, SimStats};
use repeater_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    StateSpaceCap = 4,
    Numerical = 5,
    Unsupported = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpProtocol {
    ModifiedDoubling = 0,
    Cognitive = 1,
    AuxiliaryVirtual = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpRule {
    Block = 0,
    DiscardOldest = 1,
}

impl From<RpProtocol> for Protocol {
    fn from(p: RpProtocol) -> Self {
        match p {
            RpProtocol::ModifiedDoubling => Protocol::ModifiedDoubling,
            RpProtocol::Cognitive => Protocol::Cognitive,
            RpProtocol::AuxiliaryVirtual => Protocol::AuxiliaryVirtual,
        }
    }
}

impl From<RpRule> for FullMemoryRule {
    fn from(r: RpRule) -> Self {
        match r {
            RpRule::Block => FullMemoryRule::Block,
            RpRule::DiscardOldest => FullMemoryRule::DiscardOldest,
        }
    }
}

/// A chain configuration with an optional memory allocation.
pub struct RpChain {
    config: ChainConfig,
    alloc: Option<MemoryAllocation>,
}

/// Results of one simulation run.
pub struct RpSimStats {
    stats: SimStats,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RpStatus {
    match e {
        Error::DimensionMismatch { .. } => RpStatus::DimensionMismatch,
        Error::StateSpaceCap { .. } => RpStatus::StateSpaceCap,
        Error::Solve(_) => RpStatus::Numerical,
        Error::Unsupported(_) | Error::AllocationKind(_) => RpStatus::Unsupported,
        _ => RpStatus::InvalidArgument,
    }
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Error>) -> RpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RpStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RpStatus::Panic
        }
    }
}

macro_rules! check_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(format!("null pointer: {}", stringify!($p)));
            return RpStatus::NullPointer;
        })+
    };
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Creates a chain of `2^k` links.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn rp_chain_new(k: u32, p: f64, q: f64, d: f64, c: f64, out: *mut *mut RpChain) -> RpStatus {
    check_null!(out);
    guard(|| {
        let config = ChainConfig::with_delay(k, p, q, d, c)?;
        *out = Box::into_raw(Box::new(RpChain { config, alloc: None }));
        Ok(())
    })
}

/// # Safety
/// `chain` must be NULL or a handle from [`rp_chain_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rp_chain_free(chain: *mut RpChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Reserves `levels[i]` memories per side for level `i`; `len` must be `k`.
///
/// # Safety
/// `chain` must be a live handle and `levels` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn rp_chain_set_reserved(chain: *mut RpChain, levels: *const u32, len: usize) -> RpStatus {
    check_null!(chain);
    if len > 0 {
        check_null!(levels);
    }
    guard(|| {
        let chain = &mut *chain;
        let levels = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(levels, len).to_vec() };
        let alloc = MemoryAllocation::Reserved(levels);
        repeater_core::model::validate(&chain.config, &alloc)?;
        chain.alloc = Some(alloc);
        Ok(())
    })
}

/// Gives every link side a shared pool of `b` memories.
///
/// # Safety
/// `chain` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_chain_set_cognitive(chain: *mut RpChain, b: u32) -> RpStatus {
    check_null!(chain);
    guard(|| {
        let chain = &mut *chain;
        let alloc = MemoryAllocation::Cognitive(b);
        repeater_core::model::validate(&chain.config, &alloc)?;
        chain.alloc = Some(alloc);
        Ok(())
    })
}

fn allocation(chain: &RpChain) -> Result<&MemoryAllocation, Error> {
    chain
        .alloc
        .as_ref()
        .ok_or_else(|| Error::SimConfig("chain has no memory allocation".into()))
}

/// Small-q lower bound on the modified doubling rate of a reserved chain.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_rate_lower_bound_doubling(chain: *const RpChain, out: *mut f64) -> RpStatus {
    check_null!(chain, out);
    guard(|| {
        let chain = &*chain;
        *out = rate_lower_bound_doubling(&chain.config, allocation(chain)?)?.value;
        Ok(())
    })
}

/// Small-q lower bound on the cognitive rate over `2^i` links.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_rate_lower_bound_cognitive(p: f64, q: f64, b: u32, i: u32, out: *mut f64) -> RpStatus {
    check_null!(out);
    guard(|| {
        ChainConfig::new(0, p, q)?;
        if b == 0 {
            return Err(Error::NonPositive { name: "B", value: 0.0 });
        }
        *out = rate_lower_bound_cognitive(p, q, b, i).value;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_cognitive_f(b: u32, i: u32, out: *mut f64) -> RpStatus {
    check_null!(out);
    guard(|| {
        if b == 0 {
            return Err(Error::NonPositive { name: "B", value: 0.0 });
        }
        *out = cognitive_f(b, i);
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rp_select_i0(gamma: f64, delta: f64, out: *mut u32) -> RpStatus {
    check_null!(out);
    guard(|| {
        *out = select_i0(gamma, delta)?;
        Ok(())
    })
}

/// Stationary delivery rate from the exact Markov chain.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_exact_rate(chain: *const RpChain, protocol: RpProtocol, rule: RpRule, out: *mut f64) -> RpStatus {
    check_null!(chain, out);
    guard(|| {
        let chain = &*chain;
        *out = exact_rate(&chain.config, allocation(chain)?, protocol.into(), rule.into())?;
        Ok(())
    })
}

/// Simulates until `horizon_time`.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_simulate(
    chain: *const RpChain,
    protocol: RpProtocol,
    rule: RpRule,
    classical_delay: bool,
    horizon_time: f64,
    seed: u64,
    out: *mut *mut RpSimStats,
) -> RpStatus {
    check_null!(chain, out);
    guard(|| {
        let chain = &*chain;
        let cfg = SimConfig::new(chain.config, allocation(chain)?.clone(), protocol.into(), Horizon::Time(horizon_time), seed)
            .with_rule(rule.into())
            .with_classical_delay(classical_delay);
        let stats = simulate(&cfg)?;
        *out = Box::into_raw(Box::new(RpSimStats { stats }));
        Ok(())
    })
}

/// Delivery rate and its confidence half-width.
///
/// # Safety
/// `stats` must be a live handle; `rate` and `half_width` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_stats_rate(stats: *const RpSimStats, rate: *mut f64, half_width: *mut f64) -> RpStatus {
    check_null!(stats, rate, half_width);
    let s = &(*stats).stats;
    *rate = s.rate;
    *half_width = s.rate_half_width;
    RpStatus::Ok
}

/// Chain-average communication-delay memory.
///
/// # Safety
/// `stats` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rp_stats_comm_memory(stats: *const RpSimStats, out: *mut f64) -> RpStatus {
    check_null!(stats, out);
    *out = (*stats).stats.comm_mem_avg;
    RpStatus::Ok
}

/// Number of delivered end-to-end pairs, or 0 for a NULL handle.
///
/// # Safety
/// `stats` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rp_stats_delivered(stats: *const RpSimStats) -> u64 {
    if stats.is_null() {
        return 0;
    }
    (*stats).stats.delivered
}

/// # Safety
/// `stats` must be NULL or a handle from [`rp_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rp_stats_free(stats: *mut RpSimStats) {
    if !stats.is_null() {
        drop(Box::from_raw(stats));
    }
}
