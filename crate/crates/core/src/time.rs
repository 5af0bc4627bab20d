//! Exact rational time.
//!
//! Every release time, size, start and completion in the laboratory is a
//! [`TimeQ`]. Values live in a checked `i128` ratio and are promoted to an
//! arbitrary-precision ratio only when an operation would overflow, so the
//! common case stays cheap while harmonic-number thresholds and `1/(2n^2)`
//! style epsilons remain exact.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone)]
enum Repr {
    Small(Ratio<i128>),
    Big(Box<BigRational>),
}

/// An exact rational number, always in lowest terms with a positive
/// denominator.
#[derive(Clone)]
pub struct TimeQ(Repr);

fn to_big(r: &Ratio<i128>) -> BigRational {
    BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl TimeQ {
    pub fn zero() -> Self {
        TimeQ(Repr::Small(Ratio::from_integer(0)))
    }

    pub fn one() -> Self {
        TimeQ(Repr::Small(Ratio::from_integer(1)))
    }

    pub fn from_int(v: i64) -> Self {
        TimeQ(Repr::Small(Ratio::from_integer(v as i128)))
    }

    /// `num / den`, reduced. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        TimeQ(Repr::Small(Ratio::new(num as i128, den as i128)))
    }

    pub fn from_big(r: BigRational) -> Self {
        Self::demote(r)
    }

    fn demote(r: BigRational) -> Self {
        match (r.numer().to_i128(), r.denom().to_i128()) {
            (Some(n), Some(d)) => TimeQ(Repr::Small(Ratio::new_raw(n, d))),
            _ => TimeQ(Repr::Big(Box::new(r))),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(r) => to_big(r),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.numer()),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(*r.denom()),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_zero(),
            Repr::Big(b) => b.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_negative(),
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(r) => r.is_positive(),
            Repr::Big(b) => b.is_positive(),
        }
    }

    /// True while the value fits the fast `i128` path.
    pub fn is_compact(&self) -> bool {
        matches!(self.0, Repr::Small(_))
    }

    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small(r) => BigInt::from(r.numer().div_floor(r.denom())),
            Repr::Big(b) => b.numer().div_floor(b.denom()),
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(r) => TimeQ(Repr::Small(r.recip())),
            Repr::Big(b) => Self::demote(b.recip()),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(r) => {
                let (n, d) = (*r.numer(), *r.denom());
                if n.unsigned_abs() < (1u128 << 53) && d < (1i128 << 53) {
                    n as f64 / d as f64
                } else {
                    to_big(r).to_f64().unwrap_or(f64::NAN)
                }
            }
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Decimal rendering with `sig` significant digits, truncated toward zero.
    pub fn to_decimal(&self, sig: usize) -> String {
        let r = self.to_big();
        if r.is_zero() {
            return "0".to_string();
        }
        let neg = r.is_negative();
        let num = r.numer().abs();
        let den = r.denom().clone();
        let int_part = &num / &den;
        let mut rem = &num % &den;
        let mut out = int_part.to_string();
        let mut digits = if int_part.is_zero() { 0 } else { out.len() };
        let mut frac = String::new();
        let ten = BigInt::from(10);
        while digits < sig && !rem.is_zero() {
            rem *= &ten;
            let d = &rem / &den;
            rem = &rem % &den;
            if !(digits == 0 && d.is_zero()) {
                digits += 1;
            }
            frac.push_str(&d.to_string());
        }
        if !frac.is_empty() {
            out.push('.');
            out.push_str(&frac);
        }
        if neg {
            out.insert(0, '-');
        }
        out
    }

    /// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Self::demote(BigRational::new(n, d)));
        }
        if let Some((ip, fp)) = s.split_once('.') {
            if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = ip.starts_with('-');
            let ip_digits = ip.trim_start_matches(['-', '+']);
            if !ip_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let joined = format!("{}{}", if ip_digits.is_empty() { "0" } else { ip_digits }, fp);
            let mut n: BigInt = joined.parse().map_err(|_| bad())?;
            if neg {
                n = -n;
            }
            let d = num_traits::pow(BigInt::from(10), fp.len());
            return Ok(Self::demote(BigRational::new(n, d)));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Self::demote(BigRational::from_integer(n)))
    }

    fn binop(
        &self,
        rhs: &Self,
        small: impl Fn(&Ratio<i128>, &Ratio<i128>) -> Option<Ratio<i128>>,
        big: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> Self {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(r) = small(a, b) {
                return TimeQ(Repr::Small(r));
            }
        }
        Self::demote(big(&self.to_big(), &rhs.to_big()))
    }
}

impl Default for TimeQ {
    fn default() -> Self {
        Self::zero()
    }
}

impl PartialEq for TimeQ {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a == b,
            (Repr::Big(a), Repr::Big(b)) => a == b,
            // canonical form: a value that fits i128 is never Big
            _ => false,
        }
    }
}

impl Eq for TimeQ {}

impl Ord for TimeQ {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for TimeQ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for TimeQ {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(r) => {
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Repr::Big(b) => {
                b.numer().hash(state);
                b.denom().hash(state);
            }
        }
    }
}

impl fmt::Display for TimeQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Small(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for TimeQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for TimeQ {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeQ::parse(s)
    }
}

impl From<i64> for TimeQ {
    fn from(v: i64) -> Self {
        TimeQ::from_int(v)
    }
}

impl From<usize> for TimeQ {
    fn from(v: usize) -> Self {
        TimeQ(Repr::Small(Ratio::from_integer(v as i128)))
    }
}

impl Serialize for TimeQ {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeQ {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => TimeQ::parse(&s).map_err(serde::de::Error::custom),
            Raw::Int(v) => Ok(TimeQ::from_int(v)),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident, $op:tt) => {
        impl<'a> $tr<&'a TimeQ> for &'a TimeQ {
            type Output = TimeQ;
            fn $method(self, rhs: &'a TimeQ) -> TimeQ {
                self.binop(rhs, |a, b| a.$checked(b), |a, b| a $op b)
            }
        }
        impl $tr<TimeQ> for TimeQ {
            type Output = TimeQ;
            fn $method(self, rhs: TimeQ) -> TimeQ {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a TimeQ> for TimeQ {
            type Output = TimeQ;
            fn $method(self, rhs: &'a TimeQ) -> TimeQ {
                (&self).$method(rhs)
            }
        }
        impl<'a> $tr<TimeQ> for &'a TimeQ {
            type Output = TimeQ;
            fn $method(self, rhs: TimeQ) -> TimeQ {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add, +);
forward_binop!(Sub, sub, checked_sub, -);
forward_binop!(Mul, mul, checked_mul, *);

impl<'a> Div<&'a TimeQ> for &'a TimeQ {
    type Output = TimeQ;
    fn div(self, rhs: &'a TimeQ) -> TimeQ {
        assert!(!rhs.is_zero(), "division by zero");
        self.binop(rhs, |a, b| a.checked_div(b), |a, b| a / b)
    }
}

impl Div<TimeQ> for TimeQ {
    type Output = TimeQ;
    fn div(self, rhs: TimeQ) -> TimeQ {
        &self / &rhs
    }
}

impl<'a> Div<&'a TimeQ> for TimeQ {
    type Output = TimeQ;
    fn div(self, rhs: &'a TimeQ) -> TimeQ {
        &self / rhs
    }
}

impl Neg for &TimeQ {
    type Output = TimeQ;
    fn neg(self) -> TimeQ {
        match &self.0 {
            Repr::Small(r) if *r.numer() != i128::MIN => TimeQ(Repr::Small(-r)),
            _ => TimeQ::demote(-self.to_big()),
        }
    }
}

impl Neg for TimeQ {
    type Output = TimeQ;
    fn neg(self) -> TimeQ {
        -&self
    }
}

impl AddAssign<&TimeQ> for TimeQ {
    fn add_assign(&mut self, rhs: &TimeQ) {
        *self = &*self + rhs;
    }
}

impl AddAssign for TimeQ {
    fn add_assign(&mut self, rhs: TimeQ) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&TimeQ> for TimeQ {
    fn sub_assign(&mut self, rhs: &TimeQ) {
        *self = &*self - rhs;
    }
}

impl SubAssign for TimeQ {
    fn sub_assign(&mut self, rhs: TimeQ) {
        *self = &*self - &rhs;
    }
}

impl Sum for TimeQ {
    fn sum<I: Iterator<Item = TimeQ>>(iter: I) -> TimeQ {
        iter.fold(TimeQ::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a TimeQ> for TimeQ {
    fn sum<I: Iterator<Item = &'a TimeQ>>(iter: I) -> TimeQ {
        iter.fold(TimeQ::zero(), |acc, x| acc + x)
    }
}

/// `H_n = 1 + 1/2 + ... + 1/n`, exactly.
pub fn harmonic(n: usize) -> TimeQ {
    (1..=n).map(|i| TimeQ::from(i).recip()).sum()
}

/// `floor(sqrt(x))` for a nonnegative integer.
pub fn isqrt(x: u128) -> u128 {
    if x < 2 {
        return x;
    }
    let mut r = (x as f64).sqrt() as u128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}
