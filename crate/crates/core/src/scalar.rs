//! Scalars that are either exact rationals or doubles.
//!
//! Arithmetic between two exact values stays exact; any operation touching a
//! float produces a float.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Exact,
    Float,
}

impl ScalarMode {
    pub fn combine(self, other: ScalarMode) -> ScalarMode {
        if self == ScalarMode::Exact && other == ScalarMode::Exact {
            ScalarMode::Exact
        } else {
            ScalarMode::Float
        }
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => f.write_str("exact"),
            ScalarMode::Float => f.write_str("float"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn zero(mode: ScalarMode) -> Self {
        Scalar::from_int(0, mode)
    }

    pub fn one(mode: ScalarMode) -> Self {
        Scalar::from_int(1, mode)
    }

    pub fn from_int(v: i64, mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Exact => Scalar::Exact(BigRational::from_integer(BigInt::from(v))),
            ScalarMode::Float => Scalar::Float(v as f64),
        }
    }

    /// `num / den` as an exact rational. Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn float(v: f64) -> Self {
        Scalar::Float(v)
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Exact(_) => ScalarMode::Exact,
            Scalar::Float(_) => ScalarMode::Float,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    /// Converts into the requested mode. Exact conversion of a float fails.
    pub fn into_mode(self, mode: ScalarMode) -> Result<Self> {
        match (self, mode) {
            (Scalar::Exact(r), ScalarMode::Float) => Ok(Scalar::Float(rational_to_f64(&r))),
            (s @ Scalar::Exact(_), ScalarMode::Exact) => Ok(s),
            (s @ Scalar::Float(_), ScalarMode::Float) => Ok(s),
            (Scalar::Float(v), ScalarMode::Exact) => Err(Error::invalid(format!(
                "decimal value {v} cannot be used in exact mode; write it as p/q"
            ))),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => rational_to_f64(r),
            Scalar::Float(v) => *v,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(v) => *v == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_positive(),
            Scalar::Float(v) => *v > 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Float(v) => *v < 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(v) => Scalar::Float(v.abs()),
        }
    }

    /// Integer exponent; exact values stay exact. `0^0 = 1`.
    pub fn powi(&self, exp: i64) -> Scalar {
        match self {
            Scalar::Exact(r) => {
                if exp == 0 {
                    return Scalar::Exact(BigRational::one());
                }
                let base = if exp < 0 { r.recip() } else { r.clone() };
                Scalar::Exact(num_traits::pow(base, exp.unsigned_abs() as usize))
            }
            Scalar::Float(v) => Scalar::Float(v.powi(exp as i32)),
        }
    }

    /// Real exponent. Stays exact only when the exponent is an exact integer.
    pub fn pow(&self, exp: &Scalar) -> Scalar {
        if let Some(e) = exp.as_integer() {
            if let Ok(e) = i64::try_from(e) {
                return self.powi(e);
            }
        }
        Scalar::Float(self.to_f64().powf(exp.to_f64()))
    }

    /// The value as an integer if it is an exact integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        match self {
            Scalar::Exact(r) if r.is_integer() => Some(r.to_integer()),
            _ => None,
        }
    }

    pub fn recip(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.recip()),
            Scalar::Float(v) => Scalar::Float(1.0 / v),
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Parses `p/q`, an integer, or a decimal. Decimals produce floats.
    pub fn parse(s: &str) -> Result<Scalar> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty scalar".into()));
        }
        if let Some((num, den)) = s.split_once('/') {
            let num: BigInt = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
            let den: BigInt = den
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Ok(Scalar::Exact(BigRational::new(num, den)));
        }
        if let Ok(i) = s.parse::<BigInt>() {
            return Ok(Scalar::Exact(BigRational::from_integer(i)));
        }
        s.parse::<f64>()
            .map(Scalar::Float)
            .map_err(|_| Error::Parse(format!("cannot parse scalar {s:?}")))
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(v) => write!(f, "{v:?}"),
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scalar::parse(s)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from_int(v, ScalarMode::Exact)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Exact(r)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    (a, b) => Scalar::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a += b,
            _ => *self = Scalar::Float(self.to_f64() + rhs.to_f64()),
        }
    }
}

impl AddAssign<Scalar> for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self += &rhs;
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a -= b,
            _ => *self = Scalar::Float(self.to_f64() - rhs.to_f64()),
        }
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        match (&mut *self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a *= b,
            _ => *self = Scalar::Float(self.to_f64() * rhs.to_f64()),
        }
    }
}

impl MulAssign<Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: Scalar) {
        *self *= &rhs;
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Float(v) => Scalar::Float(-v),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -self.clone()
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(ScalarMode::Exact), |acc, x| acc + x)
    }
}

impl Product for Scalar {
    fn product<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::one(ScalarMode::Exact), |acc, x| acc * x)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
            Num(f64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => Scalar::parse(&s).map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(Scalar::from(i)),
            Repr::Num(v) => Ok(Scalar::Float(v)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(Scalar::parse("3/6").unwrap(), Scalar::ratio(1, 2));
        assert!(Scalar::parse("-4").unwrap().is_exact());
        assert!(!Scalar::parse("0.25").unwrap().is_exact());
        assert!(Scalar::parse("1/0").is_err());
        assert!(Scalar::parse("abc").is_err());
    }

    #[test]
    fn mixed_arithmetic_degrades_to_float() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::Float(0.5);
        assert!(!(&a + &b).is_exact());
        assert!((&a * &a).is_exact());
        assert_eq!((&a * &a), Scalar::ratio(1, 9));
    }

    #[test]
    fn powers() {
        assert_eq!(Scalar::ratio(1, 2).powi(-3), Scalar::from(8));
        assert_eq!(Scalar::from(0).powi(0), Scalar::from(1));
        let root = Scalar::from(4).pow(&Scalar::ratio(1, 2));
        assert!(!root.is_exact());
        assert!((root.to_f64() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        for s in ["7", "-3/4", "0.125"] {
            let v = Scalar::parse(s).unwrap();
            assert_eq!(Scalar::parse(&v.to_string()).unwrap(), v);
        }
    }

    #[test]
    fn exact_mode_rejects_decimals() {
        assert!(Scalar::Float(0.5).into_mode(ScalarMode::Exact).is_err());
        assert_eq!(
            Scalar::ratio(1, 4).into_mode(ScalarMode::Float).unwrap(),
            Scalar::Float(0.25)
        );
    }
}
