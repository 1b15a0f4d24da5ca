//! Coefficient rings used by the bracket and BCH machinery.
//!
//! The same bracket code runs over exact rationals (`Rational`), doubles (walk
//! simulation) and multivariate polynomials (symbolic pencils).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub trait Scalar: Clone + fmt::Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(r: &Rational) -> Self;
    fn add_assign_ref(&mut self, other: &Self);
    fn sub_assign_ref(&mut self, other: &Self);
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&int(n))
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += *other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= *other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
}

/// Scalars with a floating-point reading, used where exact values feed
/// numerical tests.
pub trait Real: Scalar {
    fn to_f64(&self) -> f64;
}

impl Real for Rational {
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

impl Real for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Nearest double to a rational; falls back to a scaled division when the
/// numerator or denominator overflows `f64`.
pub fn rational_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(900) as usize;
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Rational serialized as `{"num": .., "den": ..}`. Components that fit in an
/// `i64` are written as JSON integers, larger ones as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsonRational(pub Rational);

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum JsonInt {
    Small(i64),
    Big(String),
}

impl JsonInt {
    pub(crate) fn from_big(b: &BigInt) -> Self {
        match b.to_i64() {
            Some(v) => JsonInt::Small(v),
            None => JsonInt::Big(b.to_string()),
        }
    }

    pub(crate) fn to_big(&self) -> Result<BigInt, String> {
        match self {
            JsonInt::Small(v) => Ok(BigInt::from(*v)),
            JsonInt::Big(s) => s.parse().map_err(|_| format!("bad integer {s:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NumDen {
    num: JsonInt,
    den: JsonInt,
}

impl Serialize for JsonRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NumDen {
            num: JsonInt::from_big(self.0.numer()),
            den: JsonInt::from_big(self.0.denom()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JsonRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let nd = NumDen::deserialize(d)?;
        let num = nd.num.to_big().map_err(de::Error::custom)?;
        let den = nd.den.to_big().map_err(de::Error::custom)?;
        if den.is_zero() {
            return Err(de::Error::custom("zero denominator"));
        }
        Ok(JsonRational(Rational::new(num, den)))
    }
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_rational_roundtrip_small_and_big() {
        let big = Rational::new(BigInt::from(10).pow(30), BigInt::from(7));
        for r in [rat(-3, 4), int(0), big] {
            let s = serde_json::to_string(&JsonRational(r.clone())).unwrap();
            let back: JsonRational = serde_json::from_str(&s).unwrap();
            assert_eq!(back.0, r);
        }
        assert_eq!(
            serde_json::to_string(&JsonRational(rat(6, -4))).unwrap(),
            r#"{"num":-3,"den":2}"#
        );
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(serde_json::from_str::<JsonRational>(r#"{"num":1,"den":0}"#).is_err());
    }

    #[test]
    fn f64_conversion_is_exact_both_ways() {
        let x = (5f64.sqrt() - 1.0) / 2.0;
        assert_eq!(rational_to_f64(&rational_from_f64(x)), x);
        let huge = Rational::new(BigInt::from(3) * BigInt::from(10).pow(400), BigInt::from(10).pow(400));
        assert!((rational_to_f64(&huge) - 3.0).abs() < 1e-12);
    }
}
