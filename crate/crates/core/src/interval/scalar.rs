//! Closed real intervals with outward rounding.
//!
//! Every arithmetic result is rounded to the tightest representable
//! enclosure. Rounding direction is recovered per operation from an
//! error-free transform (TwoSum for addition, an FMA residual for products,
//! quotients and square roots), so no global rounding mode is touched and
//! concurrent use from several threads stays sound.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// A closed interval `[lo, hi]` of reals, `lo <= hi`.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

// Directed rounding primitives. Each returns the correctly rounded result of
// the exact operation in the requested direction.

// Below this magnitude an FMA residual may itself underflow to zero, so a
// zero residual no longer proves exactness.
const TINY: f64 = 1e-290;

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[inline]
pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::INFINITY && a.is_finite() && b.is_finite() { f64::MAX } else { s };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::NEG_INFINITY && a.is_finite() && b.is_finite() { f64::MIN } else { s };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p == f64::INFINITY && a.is_finite() && b.is_finite() { f64::MAX } else { p };
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 || (e == 0.0 && p.abs() < TINY && a != 0.0 && b != 0.0) {
        p.next_down()
    } else {
        p
    }
}

#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return if p == f64::NEG_INFINITY && a.is_finite() && b.is_finite() { f64::MIN } else { p };
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 || (e == 0.0 && p.abs() < TINY && a != 0.0 && b != 0.0) {
        p.next_up()
    } else {
        p
    }
}

#[inline]
fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() || b == 0.0 {
        return q;
    }
    // a - q*b has the sign of (a/b - q) * sign(b).
    let r = (-q).mul_add(b, a);
    let below = if b > 0.0 { r < 0.0 } else { r > 0.0 };
    if below || (q.abs() < TINY && a != 0.0) {
        q.next_down()
    } else {
        q
    }
}

#[inline]
fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() || b == 0.0 {
        return q;
    }
    let r = (-q).mul_add(b, a);
    let above = if b > 0.0 { r > 0.0 } else { r < 0.0 };
    if above || (q.abs() < TINY && a != 0.0) {
        q.next_up()
    } else {
        q
    }
}

#[inline]
fn sqrt_down(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if (-s).mul_add(s, x) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
fn sqrt_up(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if (-s).mul_add(s, x) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

// libm's exp/ln are faithful but not correctly rounded; two ulps of slack
// covers their documented error.
const TRANSCENDENTAL_ULPS: usize = 2;

fn step_down(mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

fn step_up(mut x: f64, n: usize) -> f64 {
    for _ in 0..n {
        x = x.next_up();
    }
    x
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Builds `[lo, hi]`. Panics when `lo > hi` or either bound is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN point interval");
        Self { lo: x, hi: x }
    }

    /// `[-r, r]` for `r >= 0`.
    pub fn ball(r: f64) -> Self {
        Self::new(-r, r)
    }

    /// Smallest interval containing both `a` and `b`.
    pub fn from_pair(a: f64, b: f64) -> Self {
        Self::new(a.min(b), a.max(b))
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn mid(self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    /// Largest absolute value of any member.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value of any member.
    pub fn mig(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset_of(self, other: Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Elementwise maximum: encloses `max(x, y)` for `x` in self, `y` in other.
    pub fn max(self, other: Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval { lo: 0.0, hi: self.mag() }
        }
    }

    /// Square, tighter than `x * x` when the interval straddles zero.
    pub fn sqr(self) -> Interval {
        let a = self.abs();
        Interval { lo: mul_down(a.lo, a.lo), hi: mul_up(a.hi, a.hi) }
    }

    /// Square root of the nonnegative part.
    pub fn sqrt(self) -> Interval {
        Interval { lo: sqrt_down(self.lo.max(0.0)), hi: sqrt_up(self.hi.max(0.0)) }
    }

    pub fn exp(self) -> Interval {
        let lo = if self.lo == 0.0 { 1.0 } else { step_down(self.lo.exp(), TRANSCENDENTAL_ULPS).max(0.0) };
        let hi = if self.hi == 0.0 { 1.0 } else { step_up(self.hi.exp(), TRANSCENDENTAL_ULPS) };
        Interval { lo, hi }
    }

    /// Natural logarithm, for strictly positive intervals.
    pub fn ln(self) -> Interval {
        assert!(self.lo > 0.0, "ln of nonpositive interval");
        let lo = if self.lo == 1.0 { 0.0 } else { step_down(self.lo.ln(), TRANSCENDENTAL_ULPS) };
        let hi = if self.hi == 1.0 { 0.0 } else { step_up(self.hi.ln(), TRANSCENDENTAL_ULPS) };
        Interval { lo, hi }
    }

    /// Integer power by repeated outward multiplication.
    pub fn powi(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::ONE;
        }
        if k % 2 == 0 {
            let mut acc = self.sqr();
            let mut e = k / 2;
            let base = acc;
            while e > 1 {
                acc = acc * base;
                e -= 1;
            }
            acc
        } else {
            let mut acc = self;
            for _ in 1..k {
                acc = acc * self;
            }
            acc
        }
    }

    pub fn recip(self) -> Interval {
        Interval::ONE / self
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, o.lo), hi: add_up(self.hi, o.hi) }
    }
}

impl AddAssign for Interval {
    #[inline]
    fn add_assign(&mut self, o: Interval) {
        *self = *self + o;
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, -o.hi), hi: add_up(self.hi, -o.lo) }
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, o: Interval) -> Interval {
        if self.lo == self.hi && o.lo == o.hi {
            let (a, b) = (self.lo, o.lo);
            return Interval { lo: mul_down(a, b), hi: mul_up(a, b) };
        }
        if o.lo == o.hi {
            let b = o.lo;
            return if b >= 0.0 {
                Interval { lo: mul_down(self.lo, b), hi: mul_up(self.hi, b) }
            } else {
                Interval { lo: mul_down(self.hi, b), hi: mul_up(self.lo, b) }
            };
        }
        if self.lo == self.hi {
            return o * self;
        }
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = mul_down(a, c).min(mul_down(a, d)).min(mul_down(b, c)).min(mul_down(b, d));
        let hi = mul_up(a, c).max(mul_up(a, d)).max(mul_up(b, c)).max(mul_up(b, d));
        Interval { lo, hi }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        assert!(!o.contains_zero(), "interval division by an interval containing zero: {o:?}");
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = div_down(a, c).min(div_down(a, d)).min(div_down(b, c)).min(div_down(b, d));
        let hi = div_up(a, c).max(div_up(a, d)).max(div_up(b, c)).max(div_up(b, d));
        Interval { lo, hi }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, o: f64) -> Interval {
        self + Interval::point(o)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, o: f64) -> Interval {
        self - Interval::point(o)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, o: f64) -> Interval {
        self * Interval::point(o)
    }
}

impl Div<f64> for Interval {
    type Output = Interval;
    fn div(self, o: f64) -> Interval {
        self / Interval::point(o)
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}
