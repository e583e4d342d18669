//! Signed alternating-series terms.
//!
//! Terms are built from exact factorial and power tables in double-double
//! arithmetic and summed the same way, largest magnitude first. The log
//! magnitude is kept alongside for ordering and for judging how much
//! cancellation a sum has to survive.

use twofloat::TwoFloat;

/// Unit round-off of double-double arithmetic, 2^-104.
pub const DD_EPSILON: f64 = 4.930380657631324e-32;

/// One term of an alternating binomial series, labelled by its summation
/// indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    pub ln_magnitude: f64,
    pub magnitude: TwoFloat,
}

impl SeriesTerm {
    pub fn new(k: usize, i: usize, j: usize, sign: i8, magnitude: TwoFloat) -> Self {
        Self {
            k,
            i,
            j,
            sign,
            ln_magnitude: magnitude.hi().ln(),
            magnitude,
        }
    }

    #[inline]
    pub fn coefficient(&self) -> f64 {
        f64::from(self.sign) * self.magnitude.hi()
    }

    #[inline]
    fn signed(&self) -> TwoFloat {
        if self.sign < 0 {
            -self.magnitude
        } else {
            self.magnitude
        }
    }
}

/// `(-1)^e`
#[inline]
pub(crate) fn parity(e: usize) -> i8 {
    if e % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `a / b` in double-double.
///
/// twofloat's own quotient forms its residual in plain `f64` and is only
/// good to about `1e-16`; two correction steps restore full precision.
pub(crate) fn quotient(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// `a / k` for a positive integer `k`.
pub(crate) fn over(a: TwoFloat, k: usize) -> TwoFloat {
    quotient(a, TwoFloat::from(k as f64))
}

/// Binomial coefficients `C(r, k)` for `r <= n`, built by Pascal's rule.
///
/// Entries are exact while they fit in 106 bits (all rows up to 110) and
/// carry one double-double rounding per addition beyond that.
pub(crate) struct Binomials {
    rows: Vec<Vec<TwoFloat>>,
}

impl Binomials {
    pub fn new(n: usize) -> Self {
        let mut rows: Vec<Vec<TwoFloat>> = Vec::with_capacity(n + 1);
        for r in 0..=n {
            let row = (0..=r)
                .map(|k| {
                    if k == 0 || k == r {
                        TwoFloat::from(1.0)
                    } else {
                        rows[r - 1][k - 1] + rows[r - 1][k]
                    }
                })
                .collect();
            rows.push(row);
        }
        Self { rows }
    }

    pub fn choose(&self, n: usize, k: usize) -> TwoFloat {
        self.rows[n][k]
    }
}

/// Powers `d^0..=d^n` in double-double.
pub(crate) struct Powers(Vec<TwoFloat>);

impl Powers {
    pub fn new(n: usize, d: f64) -> Self {
        let mut p = TwoFloat::from(1.0);
        let mut powers = Vec::with_capacity(n + 1);
        powers.push(p);
        for _ in 0..n {
            p *= d;
            powers.push(p);
        }
        Self(powers)
    }

    #[inline]
    pub fn get(&self, e: usize) -> TwoFloat {
        self.0[e]
    }
}

/// Sums terms largest magnitude first in double-double.
pub fn sum_terms(terms: &mut [SeriesTerm]) -> f64 {
    terms.sort_by(|a, b| b.ln_magnitude.total_cmp(&a.ln_magnitude));
    let total = terms.iter().fold(TwoFloat::from(0.0), |acc, t| acc + t.signed());
    f64::from(total)
}

/// Largest term magnitude, for judging cancellation.
pub fn max_magnitude(terms: &[SeriesTerm]) -> f64 {
    terms.iter().map(|t| t.magnitude.hi()).fold(0.0, f64::max)
}
