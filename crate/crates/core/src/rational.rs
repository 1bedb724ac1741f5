//! Exact fractions, serialized as `"p/q"` strings.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A reduced fraction with positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(Ratio<i64>);

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    /// Panics when `den == 0`; use [`Rational::try_new`] for untrusted input.
    pub fn new(num: i64, den: i64) -> Self {
        Rational(Ratio::new(num, den))
    }

    pub fn try_new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain(format!("zero denominator in {num}/{den}")));
        }
        Ok(Rational::new(num, den))
    }

    pub fn int(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn floor(&self) -> i64 {
        self.numer().div_euclid(self.denom())
    }

    pub fn abs(self) -> Self {
        Rational(if self.numer() < 0 { -self.0 } else { self.0 })
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Division that reports a zero divisor instead of panicking.
    pub fn checked_div(self, rhs: Rational) -> Result<Rational> {
        if rhs.numer() == 0 {
            return Err(Error::Domain(format!("division of {self} by zero")));
        }
        Ok(self / rhs)
    }

    pub fn min(self, other: Rational) -> Rational {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Rational) -> Rational {
        std::cmp::max(self, other)
    }

    /// `start, start+step, ...` up to and including `end` when it lies on the grid.
    pub fn grid(start: Rational, end: Rational, step: Rational) -> Vec<Rational> {
        assert!(step > Rational::ZERO, "grid step must be positive");
        let mut out = Vec::new();
        let mut a = start;
        while a <= end {
            out.push(a);
            a = a + step;
        }
        out
    }

    /// Open-interval variant of [`Rational::grid`].
    pub fn open_grid(start: Rational, end: Rational, step: Rational) -> Vec<Rational> {
        Rational::grid(start, end, step)
            .into_iter()
            .filter(|a| *a > start && *a < end)
            .collect()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::parse("rational", format!("{msg}: {s:?}"));
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: i64 = num.parse().map_err(|_| bad("bad numerator"))?;
        let den: i64 = den.parse().map_err(|_| bad("bad denominator"))?;
        if den == 0 {
            return Err(bad("zero denominator"));
        }
        Ok(Rational::new(num, den))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::int(n)
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        *self == Rational::int(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        Some(self.cmp(&Rational::int(*other)))
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $f(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $tr<i64> for Rational {
            type Output = Rational;
            fn $f(self, rhs: i64) -> Rational {
                Rational(self.0 $op Ratio::from_integer(rhs))
            }
        }
        impl $tr<Rational> for i64 {
            type Output = Rational;
            fn $f(self, rhs: Rational) -> Rational {
                Rational(Ratio::from_integer(self) $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

/// Shorthand for `Rational::new`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_normalizes_sign() {
        let r = Rational::new(6, -8);
        assert_eq!(r.numer(), -3);
        assert_eq!(r.denom(), 4);
        assert_eq!(r.to_string(), "-3/4");
    }

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!("7/4".parse::<Rational>().unwrap(), q(7, 4));
        assert_eq!(" 2 ".parse::<Rational>().unwrap(), Rational::int(2));
        assert_eq!("-10/4".parse::<Rational>().unwrap(), q(-5, 2));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x/2".parse::<Rational>().is_err());
        assert!("1.5".parse::<Rational>().is_err());
    }

    #[test]
    fn floor_handles_negatives() {
        assert_eq!(q(7, 2).floor(), 3);
        assert_eq!(q(-7, 2).floor(), -4);
        assert_eq!(Rational::int(-3).floor(), -3);
    }

    #[test]
    fn json_uses_strings() {
        let s = serde_json::to_string(&q(13, 6)).unwrap();
        assert_eq!(s, "\"13/6\"");
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q(13, 6));
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = Rational::grid(q(3, 2), Rational::int(3), q(1, 8));
        assert_eq!(g.len(), 13);
        assert_eq!(*g.last().unwrap(), Rational::int(3));
        let open = Rational::open_grid(q(3, 2), Rational::int(3), q(1, 8));
        assert_eq!(open.len(), 11);
    }
}
