//! Where the TDMA point T falls on the segment A-E relative to the NOMA point N.
//!
//! The lines `R1 = R1^N`, `R2 = R2^N` and `R1 + R2 = R1^N + R2^N` cut A-E at
//! B, C and D. The four subsegments give the events:
//!
//! | event | subsegment | R1^N vs R1^T | R2^N vs R2^T | sum |
//! |-------|------------|--------------|--------------|-----|
//! | E1    | A-B        | <            | >            | >   |
//! | E2    | B-C        | >            | >            | >   |
//! | E3    | C-D        | >            | <            | >   |
//! | E4    | D-E        | >            | <            | <   |
//!
//! Because the NOMA boundary is concave and its sum rate increases along the
//! arc, each event is also determined by a subset of these comparisons.
//! [`classify_reduced`] uses only that subset and is kept independent of
//! [`classify_full`] so the two can be checked against each other.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::regions::{noma_rate_pair, tdma_rate_pair, ChannelPair, PowerSplit, TimeSplit};

/// Differences within this absolute tolerance compare as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EventId {
    E1,
    E2,
    E3,
    E4,
}

impl EventId {
    pub const ALL: [EventId; 4] = [EventId::E1, EventId::E2, EventId::E3, EventId::E4];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The subsegment of A-E the event corresponds to.
    pub fn subsegment(self) -> &'static str {
        match self {
            EventId::E1 => "A-B",
            EventId::E2 => "B-C",
            EventId::E3 => "C-D",
            EventId::E4 => "D-E",
        }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}", self.index() + 1)
    }
}

/// Signs of the NOMA-minus-TDMA differences, with ties mapped to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComparisonOutcome {
    pub r1_cmp: i8,
    pub r2_cmp: i8,
    pub sum_cmp: i8,
}

fn sign(diff: f64) -> i8 {
    if diff.abs() <= TIE_TOLERANCE {
        0
    } else if diff > 0.0 {
        1
    } else {
        -1
    }
}

impl ComparisonOutcome {
    pub fn evaluate(ch: &ChannelPair, p: &PowerSplit, t: &TimeSplit) -> Result<Self> {
        check_splits(p, t)?;
        let n = noma_rate_pair(ch, p)?;
        let t = tdma_rate_pair(ch, t);
        Ok(Self {
            r1_cmp: sign(n.r1 - t.r1),
            r2_cmp: sign(n.r2 - t.r2),
            sum_cmp: sign(n.sum() - t.sum()),
        })
    }

    pub fn has_tie(&self) -> bool {
        self.r1_cmp == 0 || self.r2_cmp == 0 || self.sum_cmp == 0
    }
}

fn check_splits(p: &PowerSplit, t: &TimeSplit) -> Result<()> {
    if p.a2() <= 0.0 {
        return Err(Error::DegenerateSplit(format!("a2 = {}", p.a2())));
    }
    if p.a2() > 0.5 {
        return Err(Error::InfeasibleNomaSplit(p.a2()));
    }
    if t.b2() <= 0.0 || t.b2() >= 1.0 {
        return Err(Error::DegenerateSplit(format!("b2 = {}", t.b2())));
    }
    Ok(())
}

/// A tied comparison is compatible with either strict direction.
#[inline]
fn holds(cmp: i8, want: Ordering) -> bool {
    cmp == 0 || cmp == want as i8
}

/// Classifies by all three comparisons. On ties the lowest-numbered
/// compatible event wins.
pub fn classify_full(ch: &ChannelPair, p: &PowerSplit, t: &TimeSplit) -> Result<EventId> {
    use Ordering::{Greater as Gt, Less as Lt};
    let c = ComparisonOutcome::evaluate(ch, p, t)?;
    let table = [
        (EventId::E1, [Lt, Gt, Gt]),
        (EventId::E2, [Gt, Gt, Gt]),
        (EventId::E3, [Gt, Lt, Gt]),
        (EventId::E4, [Gt, Lt, Lt]),
    ];
    table
        .iter()
        .find(|(_, [r1, r2, sum])| holds(c.r1_cmp, *r1) && holds(c.r2_cmp, *r2) && holds(c.sum_cmp, *sum))
        .map(|(event, _)| *event)
        .ok_or_else(|| Error::Inconsistent(format!("no event matches comparison pattern {c:?}")))
}

/// Classifies using only the comparisons that remain after the redundant
/// ones are dropped: E1 and E2 by the individual rates, E3 by the strong
/// user's rate and the sum rate, E4 by the sum rate alone.
pub fn classify_reduced(ch: &ChannelPair, p: &PowerSplit, t: &TimeSplit) -> Result<EventId> {
    use Ordering::{Greater as Gt, Less as Lt};
    let c = ComparisonOutcome::evaluate(ch, p, t)?;
    if holds(c.r1_cmp, Lt) && holds(c.r2_cmp, Gt) {
        Ok(EventId::E1)
    } else if holds(c.r1_cmp, Gt) && holds(c.r2_cmp, Gt) {
        Ok(EventId::E2)
    } else if holds(c.r2_cmp, Lt) && holds(c.sum_cmp, Gt) {
        Ok(EventId::E3)
    } else if holds(c.sum_cmp, Lt) {
        Ok(EventId::E4)
    } else {
        Err(Error::Inconsistent(format!("no reduced condition matches {c:?}")))
    }
}

/// NOMA power threshold `w2 = (1 - 2 a2) / a2^2`.
#[inline]
pub fn w2_threshold(a2: f64) -> f64 {
    (1.0 - 2.0 * a2) / (a2 * a2)
}

/// With equal time slots, E2 happens exactly when `x < w2 < y`.
pub fn epsilon2_threshold(ch: &ChannelPair, p: &PowerSplit) -> Result<bool> {
    check_splits(p, &TimeSplit::naive())?;
    let w2 = w2_threshold(p.a2());
    Ok(ch.x() < w2 && ch.y() > w2)
}
