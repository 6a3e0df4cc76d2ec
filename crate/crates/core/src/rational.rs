//! Exact rational numbers and the extended cost domain (rationals plus a top element).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision exact rational.
pub type Rational = num_rational::BigRational;

/// Builds `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as an exact rational")]
pub struct ParseRationalError(pub String);

/// Parses `"41/20"`, `"-3"`, `"0.25"`, `"6.5"` or `"1e-2"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: BigInt = format!("0{whole}{frac}").parse().map_err(|_| err())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(all);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// `"41/20"` or `"3"`.
pub fn format_exact(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal rendering for humans. Terminating expansions are exact; others are
/// cut after `max_digits` fractional digits and marked with a trailing `~`.
pub fn format_decimal(q: &Rational, max_digits: usize) -> String {
    let neg = q.is_negative();
    let q = q.abs();
    let whole = q.numer().div_floor(q.denom());
    let mut rem = q.numer() - &whole * q.denom();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&whole.to_string());
    if rem.is_zero() {
        return out;
    }
    out.push('.');
    let ten = BigInt::from(10);
    for _ in 0..max_digits {
        rem *= &ten;
        let digit = rem.div_floor(q.denom());
        rem -= &digit * q.denom();
        out.push_str(&digit.to_string());
        if rem.is_zero() {
            return out;
        }
    }
    out.push('~');
    out
}

/// A cost: an exact non-negative rational or the absorbing top element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cost {
    Finite(Rational),
    Infinite,
}

impl Cost {
    pub fn zero() -> Self {
        Cost::Finite(Rational::zero())
    }

    pub fn one() -> Self {
        Cost::Finite(Rational::one())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Cost::Infinite)
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Cost::Finite(q) => Some(q),
            Cost::Infinite => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Cost::Finite(q) if q.is_zero())
    }
}

impl From<Rational> for Cost {
    fn from(q: Rational) -> Self {
        Cost::Finite(q)
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a.cmp(b),
            (Cost::Finite(_), Cost::Infinite) => Ordering::Less,
            (Cost::Infinite, Cost::Finite(_)) => Ordering::Greater,
            (Cost::Infinite, Cost::Infinite) => Ordering::Equal,
        }
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        let lhs = std::mem::replace(self, Cost::Infinite);
        *self = lhs + rhs;
    }
}

impl Mul<&Rational> for Cost {
    type Output = Cost;
    fn mul(self, rhs: &Rational) -> Cost {
        match self {
            Cost::Finite(a) => Cost::Finite(a * rhs),
            // ∞ absorbs, including ∞·0
            Cost::Infinite => Cost::Infinite,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(q) => f.write_str(&format_exact(q)),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}
