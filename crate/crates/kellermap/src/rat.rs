//! Arbitrary-precision rational scalars in canonical form.
//!
//! Every value satisfies `den > 0` and `gcd(|num|, den) = 1`; zero is stored
//! as `0/1`. All arithmetic is exact.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Exact rational number. Construction normalizes, so equality is structural.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

/// Error for a zero denominator passed to [`Rational::new`] or the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroDenominator;

impl fmt::Display for ZeroDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "denominator must be nonzero")
    }
}

impl std::error::Error for ZeroDenominator {}

impl Rational {
    pub fn new(num: BigInt, den: BigInt) -> Result<Self, ZeroDenominator> {
        if den.is_zero() {
            return Err(ZeroDenominator);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(mut num: BigInt, mut den: BigInt) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Self::zero();
        }
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        if !den.is_one() {
            let g = num.gcd(&den);
            if !g.is_one() {
                num /= &g;
                den /= &g;
            }
        }
        Rational { num, den }
    }

    pub fn zero() -> Self {
        Rational {
            num: BigInt::zero(),
            den: BigInt::one(),
        }
    }

    pub fn one() -> Self {
        Rational {
            num: BigInt::one(),
            den: BigInt::one(),
        }
    }

    pub fn from_integer<T: Into<BigInt>>(v: T) -> Self {
        Rational {
            num: v.into(),
            den: BigInt::one(),
        }
    }

    /// Shorthand for small literal fractions, mostly in tests.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(BigInt::from(num), BigInt::from(den)).expect("nonzero denominator")
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn abs(&self) -> Self {
        Rational {
            num: self.num.abs(),
            den: self.den.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        Rational {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn add(&self, other: &Rational) -> Rational {
        // Integer fast path: the bulk of the engine's work has den = 1.
        if self.den.is_one() && other.den.is_one() {
            return Rational {
                num: &self.num + &other.num,
                den: BigInt::one(),
            };
        }
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let g = self.den.gcd(&other.den);
        if g.is_one() {
            let num = &self.num * &other.den + &other.num * &self.den;
            let den = &self.den * &other.den;
            // gcd(num, den) = 1 automatically when the denominators are coprime.
            return Rational { num, den };
        }
        let da = &self.den / &g;
        let db = &other.den / &g;
        let t = &self.num * &db + &other.num * &da;
        if t.is_zero() {
            return Self::zero();
        }
        let g2 = t.gcd(&g);
        Rational {
            num: &t / &g2,
            den: da * (&other.den / &g2),
        }
    }

    pub fn sub(&self, other: &Rational) -> Rational {
        self.add(&other.neg())
    }

    /// In-place addition; reuses the left-hand allocation on the integer
    /// fast path, which dominates polynomial accumulation loops.
    pub fn add_assign(&mut self, other: &Rational) {
        if self.den.is_one() && other.den.is_one() {
            self.num += &other.num;
        } else {
            *self = self.add(other);
        }
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return Rational {
                num: &self.num * &other.num,
                den: BigInt::one(),
            };
        }
        let g1 = self.num.gcd(&other.den);
        let g2 = other.num.gcd(&self.den);
        Rational {
            num: (&self.num / &g1) * (&other.num / &g2),
            den: (&self.den / &g2) * (&other.den / &g1),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Rational> {
        if self.is_zero() {
            return None;
        }
        let mut num = self.den.clone();
        let mut den = self.num.clone();
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        Some(Rational { num, den })
    }

    /// Exact division. Panics on division by zero; callers guard pivots.
    pub fn div(&self, other: &Rational) -> Rational {
        let inv = other.recip().expect("division by zero rational");
        self.mul(&inv)
    }

    pub fn pow(&self, exp: u32) -> Rational {
        if exp == 0 {
            return Self::one();
        }
        Rational {
            num: self.num.pow(exp),
            den: self.den.pow(exp),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        // Denominators are positive, so cross-multiplication preserves order.
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parse failure for the `int` / `int/uint` text form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalParseError(pub String);

impl fmt::Display for RationalParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal: {}", self.0)
    }
}

impl std::error::Error for RationalParseError {}

impl FromStr for Rational {
    type Err = RationalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (num_str, den_str) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s, None),
        };
        let num = BigInt::from_str(num_str).map_err(|_| RationalParseError(s.to_string()))?;
        let den = match den_str {
            Some(d) => BigInt::from_str(d).map_err(|_| RationalParseError(s.to_string()))?,
            None => BigInt::one(),
        };
        Rational::new(num, den).map_err(|_| RationalParseError(s.to_string()))
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
