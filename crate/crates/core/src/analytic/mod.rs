//! Event probabilities for a user pair drawn from `M` Rayleigh-faded users.
//!
//! With equal TDMA slots (`b2 = 1/2`) E2 reduces to `x < w2 < y` where
//! `w2 = (1 - 2 a2) / a2^2`, and with `d = e^(-w2/rho)` its probability is
//!
//! ```text
//! P(E2) = w1 sum_{k=0}^{m-1} (-1)^(m-1-k) C(m-1,k) / (n-1-k) * (Q1 - Q2,k)
//! Q1    = sum_{i=0}^{n-1} (-1)^(n-1-i) C(n-1,i) d^(M-i) / (M-i)
//! Q2,k  = sum_{i=0}^{k} sum_{j=0}^{n-1-k} (-1)^(n-1-i-j) C(k,i) C(n-1-k,j) d^(M-i) / (M-i-j)
//! ```
//!
//! E1 is `{y > w2}` minus E2, E4 needs one numerical integral over `y`, and
//! E3 is the remainder. [`oracle`] integrates the joint density against the
//! classifier directly and serves as the independent check.

pub mod oracle;
pub mod series;

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::EventId;
use crate::order_stats::{AnalyticConstants, PairingConfig};
use crate::quadrature;
use series::{max_magnitude, over, parity, sum_terms, Binomials, Powers, SeriesTerm, DD_EPSILON};
use twofloat::TwoFloat;

pub use oracle::{p_event_quadrature, quadrature_probabilities, QuadratureDiagnostics, QuadratureOptions};

/// Largest population for which the closed forms are evaluated.
pub const MAX_CLOSED_FORM_USERS: usize = 170;

/// Default relative tolerance of the one-dimensional integral in `P(E4)`.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// Closed-form results within this distance outside `[0, 1]` are clamped.
const CLAMP_SLACK: f64 = 1e-9;

/// Allowed estimated round-off in an alternating series before giving up.
const MAX_SERIES_ROUNDOFF: f64 = 1e-10;

const INTERVAL_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "mc",
        }
    }
}

/// `(P(E1), ..., P(E4))` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventProbabilities {
    pub p: [f64; 4],
    pub method: Method,
    /// Per-event standard errors (Monte Carlo only).
    pub stderr: Option<[f64; 4]>,
    /// Exact 95% binomial intervals, reported when the normal
    /// approximation behind `stderr` is not trustworthy.
    pub interval: Option<[[f64; 2]; 4]>,
    pub trials: Option<u64>,
}

impl EventProbabilities {
    pub fn get(&self, event: EventId) -> f64 {
        self.p[event.index()]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

fn constants(cfg: &PairingConfig, a2: f64) -> Result<AnalyticConstants> {
    if cfg.users() > MAX_CLOSED_FORM_USERS {
        return Err(Error::UnsupportedSize {
            users: cfg.users(),
            max: MAX_CLOSED_FORM_USERS,
        });
    }
    AnalyticConstants::new(cfg, a2)
}

fn checked_sum(terms: &mut [SeriesTerm], what: &str) -> Result<f64> {
    let roundoff = max_magnitude(terms) * DD_EPSILON * terms.len() as f64;
    if roundoff > MAX_SERIES_ROUNDOFF {
        return Err(Error::Inconsistent(format!(
            "{what}: cancellation in a {}-term alternating series leaves ~{roundoff:.1e} round-off",
            terms.len()
        )));
    }
    Ok(sum_terms(terms))
}

fn clamp_probability(p: f64, slack: f64, what: &str) -> Result<f64> {
    if p.is_finite() && (-slack..=1.0 + slack).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::Inconsistent(format!("{what} evaluated to {p}, outside [0, 1]")))
    }
}

/// Terms of the `P(E2)` triple series, `Q1` and `Q2,k` expanded.
pub fn eps2_series_terms(cfg: &PairingConfig, k: &AnalyticConstants) -> Vec<SeriesTerm> {
    let (big_m, m, n) = (cfg.users(), cfg.weak(), cfg.strong());
    let (b, pw) = (Binomials::new(big_m), Powers::new(big_m, k.d));
    let w1 = multinomial_w1(&b, big_m, m, n);
    let mut terms = Vec::new();
    for kk in 0..m {
        let outer_sign = parity(m - 1 - kk);
        let outer = over(w1 * b.choose(m - 1, kk), n - 1 - kk);
        for i in 0..n {
            let magnitude = over(outer * b.choose(n - 1, i) * pw.get(big_m - i), big_m - i);
            terms.push(SeriesTerm::new(kk, i, usize::MAX, outer_sign * parity(n - 1 - i), magnitude));
        }
        for i in 0..=kk {
            for j in 0..(n - kk) {
                let magnitude = over(outer * b.choose(kk, i) * b.choose(n - 1 - kk, j) * pw.get(big_m - i), big_m - i - j);
                terms.push(SeriesTerm::new(kk, i, j, -outer_sign * parity(n - 1 - i - j), magnitude));
            }
        }
    }
    terms
}

/// `w3 = M! / ((n-1)! (M-n)!) = n C(M, n)`.
fn multinomial_w3(b: &Binomials, big_m: usize, n: usize) -> TwoFloat {
    b.choose(big_m, n) * n as f64
}

/// `w1 = M! / ((m-1)! (n-1-m)! (M-n)!) = w3 (n-m) C(n-1, m-1)`.
fn multinomial_w1(b: &Binomials, big_m: usize, m: usize, n: usize) -> TwoFloat {
    multinomial_w3(b, big_m, n) * b.choose(n - 1, m - 1) * (n - m) as f64
}

/// `P(E2)` with equal TDMA slots: both users gain over TDMA.
pub fn p_eps2_closed(cfg: &PairingConfig, a2: f64) -> Result<f64> {
    let k = constants(cfg, a2)?;
    let mut terms = eps2_series_terms(cfg, &k);
    let p = checked_sum(&mut terms, "P(E2)")?;
    clamp_probability(p, CLAMP_SLACK, "P(E2)")
}

/// `P(E2)` for the pairing `m = 1, n = M`: `1 - (1-d)^M - d^M`.
pub fn p_eps2_special(users: usize, d: f64) -> f64 {
    let m = users as i32;
    1.0 - (1.0 - d).powi(m) - d.powi(m)
}

/// Power split that makes `d = 1/2`, which maximizes `P(E2)` for `m = 1, n = M`:
/// `a2 = (sqrt(1 + rho ln2) - 1) / (rho ln2)`.
pub fn optimal_a2_special(rho: f64) -> f64 {
    // rationalized form, no cancellation for small rho
    1.0 / ((1.0 + rho * LN_2).sqrt() + 1.0)
}

/// `P(y > w2)` from the `n`-th order-statistic series.
pub fn p_strong_above_threshold(cfg: &PairingConfig, a2: f64) -> Result<f64> {
    let k = constants(cfg, a2)?;
    strong_tail(cfg, &k)
}

fn strong_tail(cfg: &PairingConfig, k: &AnalyticConstants) -> Result<f64> {
    let (big_m, n) = (cfg.users(), cfg.strong());
    let (b, pw) = (Binomials::new(big_m), Powers::new(big_m, k.d));
    let w3 = multinomial_w3(&b, big_m, n);
    let mut terms: Vec<SeriesTerm> = (0..n)
        .map(|i| {
            let e = big_m - n + i + 1;
            SeriesTerm::new(0, i, 0, parity(i), over(w3 * b.choose(n - 1, i) * pw.get(e), e))
        })
        .collect();
    let tail = checked_sum(&mut terms, "P(y > w2)")?;
    clamp_probability(tail, CLAMP_SLACK, "P(y > w2)")
}

/// `P(E1) = P(y > w2) - P(E2)`.
pub fn p_eps1_closed(cfg: &PairingConfig, a2: f64) -> Result<f64> {
    let tail = p_strong_above_threshold(cfg, a2)?;
    let p2 = p_eps2_closed(cfg, a2)?;
    clamp_probability(tail - p2, CLAMP_SLACK, "P(E1)")
}

/// `P(E4)`, NOMA losing on sum rate:
///
/// ```text
/// 1 - w1 sum_{i=0}^{n-1-m} (-1)^i C(n-1-m,i)/(m+i)
///       * int_{sqrt(w2+1)-1}^{w2} f(y) F(y)^(n-1-m-i) (1-F(y))^(M-n)
///                                  (F(y)^(m+i) - F((w2-y)/(1+y))^(m+i)) dy
///   - P(y > w2)
/// ```
///
/// The inner sum is folded into a single integrand.
pub fn p_eps4_closed(cfg: &PairingConfig, a2: f64, quad_tol: f64) -> Result<f64> {
    if !(1e-12..=1e-4).contains(&quad_tol) {
        return Err(Error::InvalidArgument(format!("quad_tol must lie in [1e-12, 1e-4], got {quad_tol}")));
    }
    let k = constants(cfg, a2)?;
    let tail = strong_tail(cfg, &k)?;
    let (big_m, m, n, rho) = (cfg.users(), cfg.weak(), cfg.strong(), cfg.rho());
    let w2 = k.w2;
    let lower = (w2 + 1.0).sqrt() - 1.0;

    // the alternating inner sum is evaluated in double-double, like the series
    let b = Binomials::new(n - 1 - m);
    let coeffs: Vec<TwoFloat> = (0..n - m).map(|i| over(b.choose(n - 1 - m, i), m + i)).collect();
    let integrand = |y: f64| {
        let tail_y = (-y / rho).exp();
        let cdf_y = -(-y / rho).exp_m1();
        let cdf_x = -(-((w2 - y) / (1.0 + y)).max(0.0) / rho).exp_m1();
        let pow_y = Powers::new(n - 1, cdf_y);
        let pow_x = Powers::new(n - 1, cdf_x);
        let inner = coeffs.iter().enumerate().fold(TwoFloat::from(0.0), |acc, (i, c)| {
            let term = *c * pow_y.get(n - 1 - m - i) * (pow_y.get(m + i) - pow_x.get(m + i));
            if i % 2 == 0 {
                acc + term
            } else {
                acc - term
            }
        });
        tail_y / rho * tail_y.powi((big_m - n) as i32) * f64::from(inner)
    };
    let integral = if lower < w2 {
        // the integral enters P(E4) scaled by w1; a tiny integral needs no relative accuracy
        let abs_tol = 1e-3 * quad_tol / k.w1;
        quadrature::integrate(integrand, lower, w2, quad_tol, abs_tol, INTERVAL_BUDGET)?.value
    } else {
        0.0
    };
    clamp_probability(1.0 - k.w1 * integral - tail, CLAMP_SLACK, "P(E4)")
}

/// `P(E3) = 1 - P(E1) - P(E2) - P(E4)`.
pub fn p_eps3_closed(cfg: &PairingConfig, a2: f64) -> Result<f64> {
    Ok(closed_form_probabilities(cfg, a2, DEFAULT_QUAD_TOL)?.p[2])
}

/// All four probabilities from the closed forms.
pub fn closed_form_probabilities(cfg: &PairingConfig, a2: f64, quad_tol: f64) -> Result<EventProbabilities> {
    let p2 = p_eps2_closed(cfg, a2)?;
    let tail = p_strong_above_threshold(cfg, a2)?;
    let p1 = clamp_probability(tail - p2, CLAMP_SLACK, "P(E1)")?;
    let p4 = p_eps4_closed(cfg, a2, quad_tol)?;
    let p3 = clamp_probability(1.0 - p1 - p2 - p4, 1e-6, "P(E3)")?;
    Ok(EventProbabilities {
        p: [p1, p2, p3, p4],
        method: Method::ClosedForm,
        stderr: None,
        interval: None,
        trials: None,
    })
}
