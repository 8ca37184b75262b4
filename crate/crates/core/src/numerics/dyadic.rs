use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact dyadic rational `mantissa * 2^(-exponent)`.
///
/// Values are always canonical: the mantissa is odd, or the value is zero and
/// the exponent is zero. Canonical form makes structural equality coincide
/// with numeric equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicScalar {
    mantissa: BigInt,
    exponent: i64,
}

impl DyadicScalar {
    pub fn new(mantissa: impl Into<BigInt>, exponent: i64) -> Self {
        let mut v = DyadicScalar { mantissa: mantissa.into(), exponent };
        v.canonicalize();
        v
    }

    pub fn zero() -> Self {
        DyadicScalar { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        DyadicScalar { mantissa: BigInt::one(), exponent: 0 }
    }

    /// `2^n` for any signed `n`.
    pub fn pow2(n: i64) -> Self {
        DyadicScalar { mantissa: BigInt::one(), exponent: -n }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::new(n, 0)
    }

    pub fn from_biguint(n: &BigUint) -> Self {
        Self::new(BigInt::from_biguint(Sign::Plus, n.clone()), 0)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exponent <= 0
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    /// `Some(k)` when the value is exactly `2^k`.
    pub fn log2_exact(&self) -> Option<i64> {
        if self.mantissa.is_one() {
            Some(-self.exponent)
        } else {
            None
        }
    }

    /// Multiply by `2^n`; exact and cheap.
    pub fn mul_pow2(&self, n: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        DyadicScalar {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent.checked_sub(n).expect("dyadic exponent overflow"),
        }
    }

    pub fn abs(&self) -> Self {
        DyadicScalar { mantissa: self.mantissa.abs(), exponent: self.exponent }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        if self.exponent <= 0 {
            self.to_integer_unchecked()
        } else {
            let den = BigInt::one() << (self.exponent as usize);
            self.mantissa.div_floor(&den)
        }
    }

    /// Smallest integer not below the value.
    pub fn ceil(&self) -> BigInt {
        if self.exponent <= 0 {
            self.to_integer_unchecked()
        } else {
            let den = BigInt::one() << (self.exponent as usize);
            self.mantissa.div_ceil(&den)
        }
    }

    /// `frac(x) = x - floor(x)`, always in `[0, 1)`.
    pub fn fract(&self) -> Self {
        self - &DyadicScalar::from_int(self.floor())
    }

    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.to_integer_unchecked())
    }

    /// Non-negative integer value, if the value is one.
    pub fn to_biguint(&self) -> Option<BigUint> {
        self.to_integer().and_then(|n| n.to_biguint())
    }

    fn to_integer_unchecked(&self) -> BigInt {
        debug_assert!(self.exponent <= 0);
        &self.mantissa << ((-self.exponent) as usize)
    }

    /// Nearest-ish `f64`; only for display. Saturates to infinity.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mantissa.bits() as i64;
        // Keep 64 leading bits of the mantissa to stay inside f64 range.
        let drop = (bits - 64).max(0);
        let top = (&self.mantissa >> (drop as usize)).to_f64().unwrap_or(f64::NAN);
        let scale = drop - self.exponent;
        top * 2f64.powi(scale.clamp(-2000, 2000) as i32)
    }

    /// `floor(log2 |x|)` for non-zero values.
    pub fn log2_floor(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mantissa.bits() as i64 - 1 - self.exponent)
        }
    }

    fn canonicalize(&mut self) {
        match self.mantissa.trailing_zeros() {
            None => self.exponent = 0,
            Some(0) => {}
            Some(tz) => {
                self.mantissa >>= tz as usize;
                self.exponent = self
                    .exponent
                    .checked_sub(tz as i64)
                    .expect("dyadic exponent overflow");
            }
        }
    }

    /// Mantissas of `a` and `b` rescaled to the common exponent `max(ea, eb)`.
    fn aligned(a: &Self, b: &Self) -> (BigInt, BigInt, i64) {
        let e = a.exponent.max(b.exponent);
        let sa = (e - a.exponent) as usize;
        let sb = (e - b.exponent) as usize;
        (&a.mantissa << sa, &b.mantissa << sb, e)
    }
}

impl Default for DyadicScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl<'a> Add<&'a DyadicScalar> for &'a DyadicScalar {
    type Output = DyadicScalar;
    fn add(self, rhs: &DyadicScalar) -> DyadicScalar {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = DyadicScalar::aligned(self, rhs);
        DyadicScalar::new(a + b, e)
    }
}

impl<'a> Sub<&'a DyadicScalar> for &'a DyadicScalar {
    type Output = DyadicScalar;
    fn sub(self, rhs: &DyadicScalar) -> DyadicScalar {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a DyadicScalar> for &'a DyadicScalar {
    type Output = DyadicScalar;
    fn mul(self, rhs: &DyadicScalar) -> DyadicScalar {
        if self.is_zero() || rhs.is_zero() {
            return DyadicScalar::zero();
        }
        // Product of odd mantissas is odd, so the result is already canonical.
        DyadicScalar {
            mantissa: &self.mantissa * &rhs.mantissa,
            exponent: self
                .exponent
                .checked_add(rhs.exponent)
                .expect("dyadic exponent overflow"),
        }
    }
}

impl Neg for &DyadicScalar {
    type Output = DyadicScalar;
    fn neg(self) -> DyadicScalar {
        DyadicScalar { mantissa: -&self.mantissa, exponent: self.exponent }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<DyadicScalar> for DyadicScalar {
            type Output = DyadicScalar;
            fn $f(self, rhs: DyadicScalar) -> DyadicScalar {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a DyadicScalar> for DyadicScalar {
            type Output = DyadicScalar;
            fn $f(self, rhs: &DyadicScalar) -> DyadicScalar {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for DyadicScalar {
    type Output = DyadicScalar;
    fn neg(self) -> DyadicScalar {
        -&self
    }
}

impl std::iter::Sum for DyadicScalar {
    fn sum<I: Iterator<Item = DyadicScalar>>(iter: I) -> Self {
        iter.fold(DyadicScalar::zero(), |acc, x| acc + x)
    }
}

impl Ord for DyadicScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb {
            return sign_rank(sa).cmp(&sign_rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        // Same sign, both non-zero: compare magnitudes by leading bit first so
        // that huge exponent gaps never force a huge shift.
        let la = self.mantissa.bits() as i128 - self.exponent as i128;
        let lb = other.mantissa.bits() as i128 - other.exponent as i128;
        let mag = if la != lb {
            la.cmp(&lb)
        } else {
            let (a, b, _) = DyadicScalar::aligned(&self.abs(), &other.abs());
            a.cmp(&b)
        };
        if sa == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }
}

fn sign_rank(s: Sign) -> i8 {
    match s {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

impl PartialOrd for DyadicScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for DyadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, -self.exponent)
    }
}

impl fmt::Display for DyadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent <= 0 {
            write!(f, "{}", self.to_integer_unchecked())
        } else if self.exponent <= 64 {
            write!(f, "{}/{}", self.mantissa, BigUint::one() << (self.exponent as usize))
        } else {
            write!(f, "{}*2^-{}", self.mantissa, self.exponent)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    m: String,
    e: i64,
}

impl Serialize for DyadicScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire { m: self.mantissa.to_str_radix(10), e: self.exponent }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        let m = BigInt::parse_bytes(w.m.as_bytes(), 10)
            .ok_or_else(|| serde::de::Error::custom(format!("bad decimal mantissa {:?}", w.m)))?;
        Ok(DyadicScalar::new(m, w.e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: i64, e: i64) -> DyadicScalar {
        DyadicScalar::new(m, e)
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(d(1, 1) * d(1, 3), d(1, 4));
        assert_eq!(d(3, 2) * DyadicScalar::zero(), DyadicScalar::zero());
        // 3/2 * 5/4 = 15/8
        assert_eq!(d(3, 1) * d(5, 2), d(15, 3));
    }

    #[test]
    fn addition_examples() {
        assert_eq!(d(1, 1) + d(1, 1), d(1, 0));
        assert_eq!(d(1, 0) + DyadicScalar::zero(), d(1, 0));
        // 1/4 + 1/8 = 3/8 by common denominator 8
        assert_eq!(d(1, 2) + d(1, 3), d(3, 3));
    }

    #[test]
    fn comparison_examples() {
        assert_eq!(d(1, 1).cmp(&d(1, 2)), Ordering::Greater);
        assert_eq!(DyadicScalar::zero().cmp(&DyadicScalar::zero()), Ordering::Equal);
        // 3/4 vs 1: 3 * 1 < 1 * 4
        assert_eq!(d(3, 2).cmp(&d(1, 0)), Ordering::Less);
    }

    #[test]
    fn canonical_form() {
        let x = d(12, 0);
        assert_eq!(x.mantissa(), &BigInt::from(3));
        assert_eq!(x.exponent(), -2);
        let z = d(0, 17);
        assert_eq!(z.exponent(), 0);
        assert_eq!(d(-8, 3), d(-1, 0));
    }

    #[test]
    fn extreme_exponents_compare_without_shifting() {
        let tiny = DyadicScalar::pow2(-(1 << 40));
        let huge = DyadicScalar::pow2(1 << 40);
        assert!(tiny < huge);
        assert!(-&huge < -&tiny);
        assert!(tiny > DyadicScalar::zero());
    }

    #[test]
    fn floor_and_fract() {
        assert_eq!(d(5, 2).floor(), BigInt::from(1));
        assert_eq!(d(-5, 2).floor(), BigInt::from(-2));
        assert_eq!(d(-5, 2).fract(), d(3, 2));
        assert_eq!(d(-5, 2).ceil(), BigInt::from(-1));
    }

    #[test]
    fn json_shape() {
        let x = d(3, 3);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"m":"3","e":3}"#);
        let back: DyadicScalar = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        // non-canonical wire input is normalized
        let y: DyadicScalar = serde_json::from_str(r#"{"m":"8","e":1}"#).unwrap();
        assert_eq!(y, d(4, 0));
    }

    #[test]
    fn display() {
        assert_eq!(d(2048, 0).to_string(), "2048");
        assert_eq!(d(3, 3).to_string(), "3/8");
    }
}
