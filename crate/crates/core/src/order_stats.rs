//! Paired order statistics of exponentially distributed effective SNRs.
//!
//! `M` users see i.i.d. Rayleigh fading, so each effective SNR `rho |h|^2` is
//! exponential with mean `rho`. Sorting them, the `m`-th smallest is paired
//! with the `n`-th smallest: `x` is the former, `y` the latter.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};
use crate::events::w2_threshold;
use crate::regions::ChannelPair;

/// `(M, m, n, rho)`: population size, paired order indices (1-based) and
/// linear transmit SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingConfig {
    users: usize,
    weak: usize,
    strong: usize,
    rho: f64,
}

impl PairingConfig {
    pub fn new(users: usize, weak: usize, strong: usize, rho: f64) -> Result<Self> {
        if !(1 <= weak && weak < strong && strong <= users) {
            return Err(Error::InvalidPairing(format!(
                "need 1 <= m < n <= M, got M={users}, m={weak}, n={strong}"
            )));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidPairing(format!("rho must be positive and finite, got {rho}")));
        }
        Ok(Self {
            users,
            weak,
            strong,
            rho,
        })
    }

    /// `M`
    #[inline]
    pub fn users(&self) -> usize {
        self.users
    }

    /// `m`
    #[inline]
    pub fn weak(&self) -> usize {
        self.weak
    }

    /// `n`
    #[inline]
    pub fn strong(&self) -> usize {
        self.strong
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.users, self.weak, self.strong, rho)
    }

    /// `ln w1`, `w1 = M! / ((m-1)! (n-1-m)! (M-n)!)`.
    pub fn ln_w1(&self) -> f64 {
        let (big_m, m, n) = (self.users as u64, self.weak as u64, self.strong as u64);
        ln_factorial(big_m) - ln_factorial(m - 1) - ln_factorial(n - 1 - m) - ln_factorial(big_m - n)
    }

    /// `ln w3`, `w3 = M! / ((n-1)! (M-n)!)`, the density constant of the
    /// `n`-th order statistic.
    pub fn ln_w3(&self) -> f64 {
        let (big_m, n) = (self.users as u64, self.strong as u64);
        ln_factorial(big_m) - ln_factorial(n - 1) - ln_factorial(big_m - n)
    }
}

/// Constants shared by the closed-form event probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticConstants {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    /// `e^(-w2/rho)`
    pub d: f64,
    pub ln_w1: f64,
    pub ln_w3: f64,
    /// `-w2/rho`, kept separately since `d` underflows for tiny `a2`.
    pub ln_d: f64,
}

impl AnalyticConstants {
    pub fn new(cfg: &PairingConfig, a2: f64) -> Result<Self> {
        if !(a2 > 0.0 && a2 <= 0.5) {
            return Err(if a2 > 0.5 && a2 <= 1.0 {
                Error::InfeasibleNomaSplit(a2)
            } else {
                Error::InvalidPowerSplit(a2)
            });
        }
        let w2 = w2_threshold(a2);
        let ln_d = -w2 / cfg.rho;
        let (ln_w1, ln_w3) = (cfg.ln_w1(), cfg.ln_w3());
        Ok(Self {
            w1: ln_w1.exp(),
            w2,
            w3: ln_w3.exp(),
            d: ln_d.exp(),
            ln_w1,
            ln_w3,
            ln_d,
        })
    }
}

/// `x^k` with `0^0 = 1`.
#[inline]
fn powi0(x: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// Joint density of `(x, y)`; zero off the support `0 < x < y`.
pub fn joint_pdf(x: f64, y: f64, cfg: &PairingConfig) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidArgument(format!("joint_pdf needs positive finite SNRs, got ({x}, {y})")));
    }
    if x >= y {
        return Ok(0.0);
    }
    let (big_m, m, n, rho) = (cfg.users, cfg.weak, cfg.strong, cfg.rho);
    let tail_x = (-x / rho).exp();
    let tail_y = (-y / rho).exp();
    let cdf_x = -(-x / rho).exp_m1();
    // F(y) - F(x) = e^(-x/rho) (1 - e^(-(y-x)/rho))
    let gap = tail_x * -(-(y - x) / rho).exp_m1();
    let density = cfg.ln_w1().exp() / (rho * rho)
        * tail_x
        * tail_y
        * powi0(cdf_x, m - 1)
        * powi0(tail_y, big_m - n)
        * powi0(gap, n - 1 - m);
    Ok(density)
}

/// CDF of the `k`-th smallest of `M` exponentials with mean `rho`:
/// `sum_{i=k}^{M} C(M,i) F^i (1-F)^(M-i)`.
pub fn order_stat_cdf(t: f64, k: usize, users: usize, rho: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t.is_infinite() {
        return 1.0;
    }
    let ln_tail = -t / rho;
    let ln_cdf = (-(ln_tail.exp_m1())).ln();
    let total: f64 = (k..=users)
        .map(|i| {
            let ln_term = ln_binomial(users as u64, i as u64) + i as f64 * ln_cdf + (users - i) as f64 * ln_tail;
            ln_term.exp()
        })
        .sum();
    total.min(1.0)
}

/// CDF of `y`, the `n`-th order statistic.
pub fn marginal_cdf_n(t: f64, cfg: &PairingConfig) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("marginal CDF needs t >= 0, got {t}")));
    }
    Ok(order_stat_cdf(t, cfg.strong, cfg.users, cfg.rho))
}

/// CDF of `x`, the `m`-th order statistic.
pub fn marginal_cdf_m(t: f64, cfg: &PairingConfig) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("marginal CDF needs t >= 0, got {t}")));
    }
    Ok(order_stat_cdf(t, cfg.weak, cfg.users, cfg.rho))
}

/// Draws `(x, y)` by generating all `M` effective SNRs and sorting them.
#[derive(Debug, Clone)]
pub struct PairSampler {
    cfg: PairingConfig,
    scratch: Vec<f64>,
}

impl PairSampler {
    pub fn new(cfg: PairingConfig) -> Self {
        Self {
            cfg,
            scratch: Vec::with_capacity(cfg.users),
        }
    }

    pub fn config(&self) -> &PairingConfig {
        &self.cfg
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> ChannelPair {
        let (m, n, rho) = (self.cfg.weak, self.cfg.strong, self.cfg.rho);
        loop {
            self.scratch.clear();
            self.scratch
                .extend((0..self.cfg.users).map(|_| rng.sample::<f64, _>(Exp1) * rho));
            self.scratch.sort_unstable_by(f64::total_cmp);
            // ties and zero draws have probability zero; redraw if they happen
            if let Ok(pair) = ChannelPair::new(self.scratch[m - 1], self.scratch[n - 1]) {
                return pair;
            }
        }
    }
}

/// One draw of the paired order statistics.
pub fn sample_pair<R: Rng + ?Sized>(cfg: &PairingConfig, rng: &mut R) -> ChannelPair {
    PairSampler::new(*cfg).sample(rng)
}
