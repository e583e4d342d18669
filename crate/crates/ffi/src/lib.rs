//! C interface to `noma-core`.
//!
//! Every function returns a [`NomaStatus`]; on failure a description is
//! available from [`noma_last_error_message`] on the same thread. Pairing
//! configurations are passed around as opaque [`NomaPairing`] handles.
//! Panics never cross the boundary; they are reported as
//! [`NomaStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noma_core::analytic::{
    closed_form_probabilities, optimal_a2_special, quadrature_probabilities, QuadratureOptions, DEFAULT_QUAD_TOL,
};
use noma_core::montecarlo::{estimate_average_rates, estimate_event_probs};
use noma_core::regions::{noma_rate_pair, tdma_rate_pair};
use noma_core::{classify_full, ChannelPair, Error, EventProbabilities, McConfig, PairingConfig, PowerSplit, TimeSplit};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NomaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Power split outside the NOMA range or a degenerate time split.
    InvalidSplit = 3,
    NonConvergence = 4,
    Unsupported = 5,
    Internal = 6,
    Panic = 7,
}

/// Ordered user pair drawn from `users` i.i.d. Rayleigh users.
pub struct NomaPairing {
    cfg: PairingConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NomaEventProbs {
    /// P(E1) .. P(E4).
    pub p: [f64; 4],
    /// Monte Carlo standard errors; zero for deterministic methods.
    pub std_error: [f64; 4],
    /// Trials behind a Monte Carlo estimate, 0 otherwise.
    pub trials: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NomaAverageRates {
    pub r1_noma: f64,
    pub r2_noma: f64,
    pub r1_tdma: f64,
    pub r2_tdma: f64,
    pub std_error: [f64; 4],
    pub trials: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NomaRatePair {
    pub r1: f64,
    pub r2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> NomaStatus {
    match err {
        Error::InvalidPowerSplit(_)
        | Error::InfeasibleNomaSplit(_)
        | Error::InvalidTimeSplit(_)
        | Error::DegenerateSplit(_) => NomaStatus::InvalidSplit,
        Error::NonConvergence(_) => NomaStatus::NonConvergence,
        Error::UnsupportedSize { .. } => NomaStatus::Unsupported,
        Error::Inconsistent(_) => NomaStatus::Internal,
        _ => NomaStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NomaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NomaStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is null"));
            NomaStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_last_error(format!("panic: {msg}"));
            NomaStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn pairing_ref<'a>(p: *const NomaPairing) -> Result<&'a PairingConfig, Failure> {
    p.as_ref().map(|p| &p.cfg).ok_or(Failure::Null("pairing"))
}

fn to_c(p: &EventProbabilities) -> NomaEventProbs {
    NomaEventProbs {
        p: p.p,
        std_error: p.stderr.unwrap_or([0.0; 4]),
        trials: p.trials.unwrap_or(0),
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn noma_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn noma_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a pairing of the `weak`-th and `strong`-th weakest of `users`
/// users at average SNR `rho` (linear). Free with [`noma_pairing_free`].
///
/// # Safety
/// `out` must be null or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn noma_pairing_new(
    users: u32,
    weak: u32,
    strong: u32,
    rho: f64,
    out: *mut *mut NomaPairing,
) -> NomaStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let cfg = PairingConfig::new(users as usize, weak as usize, strong as usize, rho)?;
        out.write(Box::into_raw(Box::new(NomaPairing { cfg })));
        Ok(())
    })
}

/// Releases a handle from [`noma_pairing_new`]. Null is ignored.
///
/// # Safety
/// `pairing` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn noma_pairing_free(pairing: *mut NomaPairing) {
    if !pairing.is_null() {
        drop(Box::from_raw(pairing));
    }
}

/// Closed-form event probabilities (equal time slots).
///
/// # Safety
/// `pairing` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_event_probs_closed(
    pairing: *const NomaPairing,
    a2: f64,
    out: *mut NomaEventProbs,
) -> NomaStatus {
    guard(|| {
        let cfg = pairing_ref(pairing)?;
        let probs = closed_form_probabilities(cfg, a2, DEFAULT_QUAD_TOL)?;
        write_out(out, to_c(&probs), "out")
    })
}

/// Event probabilities by 2-D quadrature, any `b2` in (0, 1).
///
/// # Safety
/// `pairing` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_event_probs_quadrature(
    pairing: *const NomaPairing,
    a2: f64,
    b2: f64,
    tol: f64,
    out: *mut NomaEventProbs,
) -> NomaStatus {
    guard(|| {
        let cfg = pairing_ref(pairing)?;
        let (probs, _) = quadrature_probabilities(cfg, a2, b2, &QuadratureOptions::with_tol(tol))?;
        write_out(out, to_c(&probs), "out")
    })
}

/// Monte Carlo event frequencies.
///
/// # Safety
/// `pairing` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_event_probs_mc(
    pairing: *const NomaPairing,
    a2: f64,
    b2: f64,
    trials: u64,
    seed: u64,
    shards: u32,
    out: *mut NomaEventProbs,
) -> NomaStatus {
    guard(|| {
        let cfg = pairing_ref(pairing)?;
        let mc = McConfig::new(trials, seed, shards as usize)?;
        let probs = estimate_event_probs(cfg, a2, b2, &mc)?;
        write_out(out, to_c(&probs), "out")
    })
}

/// Monte Carlo average rates of NOMA and TDMA.
///
/// # Safety
/// `pairing` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_average_rates_mc(
    pairing: *const NomaPairing,
    a2: f64,
    b2: f64,
    trials: u64,
    seed: u64,
    shards: u32,
    out: *mut NomaAverageRates,
) -> NomaStatus {
    guard(|| {
        let cfg = pairing_ref(pairing)?;
        let mc = McConfig::new(trials, seed, shards as usize)?;
        let r = estimate_average_rates(cfg, a2, b2, &mc)?;
        let value = NomaAverageRates {
            r1_noma: r.r1_noma,
            r2_noma: r.r2_noma,
            r1_tdma: r.r1_tdma,
            r2_tdma: r.r2_tdma,
            std_error: r.stderr,
            trials: r.trials,
        };
        write_out(out, value, "out")
    })
}

/// Classifies one channel pair; writes 1..=4 for E1..E4.
///
/// # Safety
/// `event` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_classify(x: f64, y: f64, a2: f64, b2: f64, event: *mut u32) -> NomaStatus {
    guard(|| {
        let ch = ChannelPair::new(x, y)?;
        let e = classify_full(&ch, &PowerSplit::noma(a2)?, &TimeSplit::new(b2)?)?;
        write_out(event, e.index() as u32 + 1, "event")
    })
}

/// NOMA rate pair with successive interference cancellation.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_rates(x: f64, y: f64, a2: f64, out: *mut NomaRatePair) -> NomaStatus {
    guard(|| {
        let r = noma_rate_pair(&ChannelPair::new(x, y)?, &PowerSplit::noma(a2)?)?;
        write_out(out, NomaRatePair { r1: r.r1, r2: r.r2 }, "out")
    })
}

/// TDMA rate pair with time fraction `b2` for the strong user.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_tdma_rates(x: f64, y: f64, b2: f64, out: *mut NomaRatePair) -> NomaStatus {
    guard(|| {
        let r = tdma_rate_pair(&ChannelPair::new(x, y)?, &TimeSplit::new(b2)?);
        write_out(out, NomaRatePair { r1: r.r1, r2: r.r2 }, "out")
    })
}

/// Power split maximizing P(E2) for the pairing of the weakest and strongest
/// user.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn noma_optimal_a2(rho: f64, out: *mut f64) -> NomaStatus {
    guard(|| {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be finite and positive, got {rho}")).into());
        }
        write_out(out, optimal_a2_special(rho), "out")
    })
}
