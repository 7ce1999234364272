//! Scalar abstraction for probabilities.
//!
//! Every engine in the crate is generic over [`Prob`], so the same code runs
//! on `f64` (the default), `f32`, and exact [`BigRational`] arithmetic. The
//! rational instantiation is what the zero-tolerance property tests use.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// A nonnegative probability-like number.
pub trait Prob: Clone + Debug + PartialOrd + Num + Send + Sync + 'static {
    /// Absolute slack used when comparing widths and products that were
    /// computed along different arithmetic paths. Zero for exact types.
    const SLACK: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    /// Parses a plain decimal literal (`0`, `1`, `0.25`, `.5`).
    fn parse_decimal(s: &str) -> Option<Self>;

    /// Renders a literal that [`Prob::parse_decimal`] reads back to the same value.
    fn to_decimal(&self) -> String;

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }

    /// `|self - other| <= tol`, with `tol` taken as an f64 absolute tolerance.
    fn near(&self, other: &Self, tol: f64) -> bool {
        self.abs_diff(other) <= Self::from_f64(tol)
    }
}

fn is_decimal_literal(s: &str) -> bool {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => !int.is_empty() && digits(int),
        Some(f) => !f.is_empty() && digits(f) && digits(int),
    }
}

impl Prob for f64 {
    const SLACK: f64 = 1e-12;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        if !is_decimal_literal(s) {
            return None;
        }
        s.parse().ok()
    }

    fn to_decimal(&self) -> String {
        // f64's Display is shortest-round-trip and never uses exponents.
        format!("{}", self)
    }
}

impl Prob for f32 {
    const SLACK: f64 = 1e-6;

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        if !is_decimal_literal(s) {
            return None;
        }
        s.parse().ok()
    }

    fn to_decimal(&self) -> String {
        format!("{}", self)
    }
}

impl Prob for BigRational {
    const SLACK: f64 = 0.0;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite probability")
    }

    fn to_f64(&self) -> f64 {
        self.to_f64_lossy()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        if !is_decimal_literal(s) {
            return None;
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits = format!("{}{}", int, frac);
        let numer: BigInt = digits.parse().ok()?;
        let denom = num_traits::pow(BigInt::from(10u32), frac.len());
        Some(BigRational::new(numer, denom))
    }

    fn to_decimal(&self) -> String {
        match terminating_decimal(self) {
            Some(s) => s,
            None => format!("{}", self.to_f64_lossy()),
        }
    }

    fn near(&self, other: &Self, tol: f64) -> bool {
        if tol == 0.0 {
            return self == other;
        }
        self.abs_diff(other) <= Self::from_f64(tol)
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

/// Exact decimal expansion when the denominator has only factors 2 and 5.
fn terminating_decimal(q: &BigRational) -> Option<String> {
    if q.is_negative() {
        return None;
    }
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut d = q.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let scaled = (q * BigRational::from_integer(scale)).to_integer();
    let text = scaled.to_string();
    if places == 0 {
        return Some(text);
    }
    let padded = format!("{:0>width$}", text, width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    Some(format!("{}.{}", int, frac))
}

/// Kahan-compensated sum. For exact types the compensation term is always zero.
pub fn compensated_sum<P: Prob, I: IntoIterator<Item = P>>(items: I) -> P {
    let mut sum = P::zero();
    let mut comp = P::zero();
    for x in items {
        let y = x - comp.clone();
        let t = sum.clone() + y.clone();
        comp = (t.clone() - sum) - y;
        sum = t;
    }
    sum
}

/// Product of a sequence, `1` when empty.
pub fn product<P: Prob, I: IntoIterator<Item = P>>(items: I) -> P {
    items.into_iter().fold(P::one(), |acc, x| acc * x)
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let s = format!("{:.*e}", (digits - 1).max(0) as usize, x);
    s.parse().unwrap_or(x)
}
