//! Rate pairs and region boundaries of the two-user scalar Gaussian broadcast
//! channel at a fixed channel realization.
//!
//! Coordinates follow the usual picture of the three regions: the stronger
//! user's rate `r2` runs along the horizontal axis and the weaker user's rate
//! `r1` along the vertical one. Point A is `(r2, r1) = (0, R1*)`, point E is
//! `(R2*, 0)`, and point F, the end of the NOMA arc at `a2 = 1/2`, is
//! `(log2(1 + y/2), log2(1 + x/(2 + x)))`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute slack accepted outside a boundary domain before erroring.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// `log2(1 + t)`, accurate for small `t`.
#[inline]
pub fn log2_1p(t: f64) -> f64 {
    t.ln_1p() / LN_2
}

/// Ordered effective SNR pair of the weaker (`x`) and stronger (`y`) user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelPair {
    x: f64,
    y: f64,
}

impl ChannelPair {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && x > 0.0 && x < y {
            Ok(Self { x, y })
        } else {
            Err(Error::InvalidChannel { x, y })
        }
    }

    /// Builds a pair from channel power gains and a linear transmit SNR.
    pub fn from_gains(weak_gain: f64, strong_gain: f64, rho: f64) -> Result<Self> {
        Self::new(weak_gain * rho, strong_gain * rho)
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
}

/// NOMA power allocation. Only `a2` is stored so `a1 + a2 = 1` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSplit {
    a2: f64,
}

impl PowerSplit {
    /// Any split of the capacity region, `0 <= a2 <= 1`.
    pub fn new(a2: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a2) {
            Ok(Self { a2 })
        } else {
            Err(Error::InvalidPowerSplit(a2))
        }
    }

    /// A split admissible for NOMA, `0 <= a2 <= 1/2` (the closed end is allowed).
    pub fn noma(a2: f64) -> Result<Self> {
        let split = Self::new(a2)?;
        split.check_noma()?;
        Ok(split)
    }

    fn check_noma(&self) -> Result<()> {
        if self.a2 > 0.5 {
            Err(Error::InfeasibleNomaSplit(self.a2))
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn a1(&self) -> f64 {
        1.0 - self.a2
    }

    #[inline]
    pub fn a2(&self) -> f64 {
        self.a2
    }
}

/// TDMA time sharing. Only `b2` is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSplit {
    b2: f64,
}

impl TimeSplit {
    pub fn new(b2: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&b2) {
            Ok(Self { b2 })
        } else {
            Err(Error::InvalidTimeSplit(b2))
        }
    }

    /// Equal slots.
    pub fn naive() -> Self {
        Self { b2: 0.5 }
    }

    #[inline]
    pub fn b1(&self) -> f64 {
        1.0 - self.b2
    }

    #[inline]
    pub fn b2(&self) -> f64 {
        self.b2
    }
}

/// An achievable rate pair in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    #[inline]
    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// Single-user rates `(R1*, R2*) = (log2(1+x), log2(1+y))`.
pub fn single_user_rates(ch: &ChannelPair) -> (f64, f64) {
    (log2_1p(ch.x), log2_1p(ch.y))
}

/// Rate pair of superposition coding with SIC at the stronger user.
pub fn noma_rate_pair(ch: &ChannelPair, p: &PowerSplit) -> Result<RatePair> {
    p.check_noma()?;
    Ok(superposition_rate_pair(ch, p))
}

/// Same as [`noma_rate_pair`] without the `a2 <= 1/2` restriction; traces
/// the full capacity boundary as `a2` sweeps `[0, 1]`.
pub fn superposition_rate_pair(ch: &ChannelPair, p: &PowerSplit) -> RatePair {
    let (x, y) = (ch.x, ch.y);
    RatePair {
        r1: log2_1p(p.a1() * x / (1.0 + p.a2() * x)),
        r2: log2_1p(p.a2() * y),
    }
}

pub fn tdma_rate_pair(ch: &ChannelPair, t: &TimeSplit) -> RatePair {
    let (r1_star, r2_star) = single_user_rates(ch);
    RatePair {
        r1: t.b1() * r1_star,
        r2: t.b2() * r2_star,
    }
}

fn check_domain(z: f64, max: f64) -> Result<f64> {
    if z.is_nan() || z < -DOMAIN_SLACK || z > max + DOMAIN_SLACK {
        Err(Error::Domain { z, max })
    } else {
        Ok(z.clamp(0.0, max))
    }
}

/// NOMA boundary `f^N(z) = log2((1+x) y / (y + (2^z - 1) x))` on `[0, R2*]`.
pub fn noma_boundary(z: f64, ch: &ChannelPair) -> Result<f64> {
    let (_, r2_star) = single_user_rates(ch);
    let z = check_domain(z, r2_star)?;
    Ok(boundary_unchecked(z, ch))
}

/// Capacity boundary. As a curve it coincides with [`noma_boundary`]; NOMA
/// only uses the arc up to point F.
pub fn capacity_boundary(z: f64, ch: &ChannelPair) -> Result<f64> {
    noma_boundary(z, ch)
}

#[inline]
fn boundary_unchecked(z: f64, ch: &ChannelPair) -> f64 {
    // 2^z - 1 = a2 * y on the curve
    let excess = (z * LN_2).exp_m1();
    let value = log2_1p(ch.x) - log2_1p(excess * ch.x / ch.y);
    value.max(0.0)
}

/// `d f^N / dz = -x 2^z / (y - x + x 2^z)`.
pub fn noma_boundary_slope(z: f64, ch: &ChannelPair) -> Result<f64> {
    let (_, r2_star) = single_user_rates(ch);
    let z = check_domain(z, r2_star)?;
    let (x, y) = (ch.x, ch.y);
    let p = z.exp2();
    Ok(-x * p / (y - x + x * p))
}

/// TDMA boundary `f^T(z) = (1 - z/R2*) R1*`, the segment A-E.
pub fn tdma_boundary(z: f64, ch: &ChannelPair) -> Result<f64> {
    let (r1_star, r2_star) = single_user_rates(ch);
    let z = check_domain(z, r2_star)?;
    Ok((1.0 - z / r2_star) * r1_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Capacity,
    Noma,
    Tdma,
}

impl RegionKind {
    pub const ALL: [RegionKind; 3] = [RegionKind::Capacity, RegionKind::Noma, RegionKind::Tdma];

    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::Capacity => "capacity",
            RegionKind::Noma => "noma",
            RegionKind::Tdma => "tdma",
        }
    }
}

/// `count` boundary points with `r2` evenly spaced on `[0, Z_max]`.
///
/// `Z_max` is `R2*` for the capacity and TDMA boundaries and `log2(1 + y/2)`
/// (point F) for NOMA.
pub fn region_boundary_samples(kind: RegionKind, ch: &ChannelPair, count: usize) -> Result<Vec<RatePair>> {
    match kind {
        RegionKind::Noma => noma_arc_samples(ch, 0.5, count),
        RegionKind::Capacity => sample_curve(ch, single_user_rates(ch).1, count, boundary_unchecked),
        RegionKind::Tdma => {
            let (r1_star, r2_star) = single_user_rates(ch);
            sample_curve(ch, r2_star, count, |z, _| (1.0 - z / r2_star) * r1_star)
        }
    }
}

/// NOMA arc from A up to the point reached with power split `a2_max`.
pub fn noma_arc_samples(ch: &ChannelPair, a2_max: f64, count: usize) -> Result<Vec<RatePair>> {
    let split = PowerSplit::noma(a2_max)?;
    let z_max = log2_1p(split.a2() * ch.y);
    sample_curve(ch, z_max, count, boundary_unchecked)
}

fn sample_curve(
    ch: &ChannelPair,
    z_max: f64,
    count: usize,
    curve: impl Fn(f64, &ChannelPair) -> f64,
) -> Result<Vec<RatePair>> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 boundary points, got {count}")));
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let z = if i == count - 1 { z_max } else { z_max * i as f64 / last };
            RatePair { r1: curve(z, ch), r2: z }
        })
        .collect())
}

/// Positions, as `b2` along A-E, where the lines `R1 = R1^N`, `R2 = R2^N`
/// and `R1 + R2 = R1^N + R2^N` cross the TDMA segment (points B, C and D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentBreakpoints {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SegmentBreakpoints {
    pub fn new(ch: &ChannelPair, p: &PowerSplit) -> Result<Self> {
        let n = noma_rate_pair(ch, p)?;
        let (r1_star, r2_star) = single_user_rates(ch);
        Ok(Self {
            b: 1.0 - n.r1 / r1_star,
            c: n.r2 / r2_star,
            d: (n.sum() - r1_star) / (r2_star - r1_star),
        })
    }

    /// The TDMA rate pair at each breakpoint, in order B, C, D.
    pub fn points(&self, ch: &ChannelPair) -> [RatePair; 3] {
        [self.b, self.c, self.d].map(|b2| tdma_rate_pair(ch, &TimeSplit { b2: b2.clamp(0.0, 1.0) }))
    }
}
