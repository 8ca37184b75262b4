use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;

/// Working precision of the series, in bits below the binary point.
pub const WORK_BITS: u64 = 192;

/// A real number known to lie in `[lo, hi]`, both ends dyadic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: DyadicScalar,
    pub hi: DyadicScalar,
}

impl Enclosure {
    pub fn exact(x: DyadicScalar) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn new(lo: DyadicScalar, hi: DyadicScalar) -> Self {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> DyadicScalar {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> DyadicScalar {
        (&self.lo + &self.hi).mul_pow2(-1)
    }

    pub fn radius(&self) -> DyadicScalar {
        self.width().mul_pow2(-1)
    }

    pub fn contains(&self, x: &DyadicScalar) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure::new(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let c = [&self.lo * &other.lo, &self.lo * &other.hi, &self.hi * &other.lo, &self.hi * &other.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Enclosure::new(lo, hi)
    }

    pub fn mul_exact(&self, x: &DyadicScalar) -> Enclosure {
        self.mul(&Enclosure::exact(x.clone()))
    }

    pub fn powi(&self, p: u32) -> Enclosure {
        (0..p).fold(Enclosure::exact(DyadicScalar::one()), |acc, _| acc.mul(self))
    }

    /// `self / other` for `self >= 0` and `other > 0`, ends rounded outward
    /// to about [`WORK_BITS`] significant bits.
    pub fn div(&self, other: &Enclosure) -> Result<Enclosure> {
        if self.lo.is_negative() || !other.lo.is_positive() {
            return Err(Error::Domain(format!("division [{self}] / [{other}] needs a >= 0 and b > 0")));
        }
        Ok(Enclosure::new(
            div_round(&self.lo, &other.hi, false),
            div_round(&self.hi, &other.lo, true),
        ))
    }

    /// Largest relative error `width / lo`, as an upper bound.
    pub fn relative_width(&self) -> Option<Enclosure> {
        Enclosure::exact(self.width()).div(&Enclosure::exact(self.lo.clone())).ok()
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {}", to_scientific(&self.mid(), 10), to_scientific(&self.radius(), 3))
    }
}

/// `a / b` for positive dyadics, floor or ceiling at [`WORK_BITS`] bits.
fn div_round(a: &DyadicScalar, b: &DyadicScalar, up: bool) -> DyadicScalar {
    if a.is_zero() {
        return DyadicScalar::zero();
    }
    // value = (ma / mb) · 2^{eb - ea}
    let (ma, mb) = (a.mantissa(), b.mantissa());
    let shift = WORK_BITS as i64 + mb.bits() as i64 - ma.bits() as i64;
    let (num, den) = if shift >= 0 { (ma << shift as usize, mb.clone()) } else { (ma.clone(), mb << (-shift) as usize) };
    let (q, r) = num.div_rem(&den);
    let q = if up && !r.is_zero() { q + 1 } else { q };
    DyadicScalar::new(q, a.exponent() - b.exponent() + shift)
}

/// Fixed-point enclosure of `atanh(num/den)` for `0 <= num/den <= 1/3`, in
/// units of `2^{-w}`.
fn atanh_fixed(num: &BigInt, den: &BigInt, w: u64) -> (BigInt, BigInt) {
    let one = BigInt::one() << w as usize;
    let t_lo = (num << w as usize).div_floor(den);
    let t_hi = if (num << w as usize).is_multiple_of(den) { t_lo.clone() } else { &t_lo + 1 };
    let series = |t: &BigInt, up: bool| -> BigInt {
        let t2 = round_shift(&(t * t), w, up);
        let mut p = t.clone();
        let mut sum = BigInt::zero();
        let mut i = 0u64;
        while p > BigInt::one() {
            let d = BigInt::from(2 * i + 1);
            sum += if up { ceil_div(&p, &d) } else { p.div_floor(&d) };
            p = round_shift(&(&p * &t2), w, up);
            i += 1;
        }
        if up {
            // remaining terms are each below `p` and decay by at least 1/9
            sum += 2 * (p + 1);
        }
        sum
    };
    debug_assert!(t_hi <= &one / 3 + 1);
    (series(&t_lo, false), series(&t_hi, true))
}

fn round_shift(x: &BigInt, w: u64, up: bool) -> BigInt {
    let q = x >> w as usize;
    if up && &(&q << w as usize) != x {
        q + 1
    } else {
        q
    }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if r.is_positive() {
        q + 1
    } else {
        q
    }
}

/// `ln u` for a positive dyadic, with absolute error about `2^{-w}`.
pub fn ln_dyadic(u: &DyadicScalar, w: u64) -> Result<Enclosure> {
    if !u.is_positive() {
        return Err(Error::Domain(format!("ln of non-positive {u}")));
    }
    let w = w + 8;
    // u = v · 2^n with v in [1, 2)
    let n = u.log2_floor().expect("positive");
    let v = u.mul_pow2(-n);
    // t = (v - 1)/(v + 1) with v = m · 2^{-e}
    let m = v.mantissa().clone();
    let pe = BigInt::one() << v.exponent().max(0) as usize;
    let (a_lo, a_hi) = atanh_fixed(&(&m - &pe), &(&m + &pe), w);
    let (l2_lo, l2_hi) = atanh_fixed(&BigInt::one(), &BigInt::from(3), w);
    let nn = BigInt::from(n);
    let (nl2_lo, nl2_hi) = if n >= 0 { (&nn * &l2_lo, &nn * &l2_hi) } else { (&nn * &l2_hi, &nn * &l2_lo) };
    let scale = -(w as i64) + 1; // results are 2·atanh
    Ok(Enclosure::new(
        DyadicScalar::new(nl2_lo + a_lo, -scale),
        DyadicScalar::new(nl2_hi + a_hi, -scale),
    ))
}

/// `ln(1 + x)` for an enclosure of `x >= 0`; extra bits keep the relative
/// error small when `x` is tiny.
pub fn ln1p(x: &Enclosure) -> Result<Enclosure> {
    if x.lo.is_negative() {
        return Err(Error::Domain(format!("ln1p of negative [{x}]")));
    }
    let tiny = x.lo.log2_floor().map_or(0, |l| (-l).max(0) as u64);
    let w = WORK_BITS + tiny;
    let one = DyadicScalar::one();
    let lo = ln_dyadic(&(&x.lo + &one), w)?.lo;
    let hi = ln_dyadic(&(&x.hi + &one), w)?.hi;
    Ok(Enclosure::new(lo.max(DyadicScalar::zero()), hi))
}

/// Decimal scientific rendering with `digits` significant digits, rounded
/// to nearest. Works for magnitudes far outside the `f64` range.
pub fn to_scientific(x: &DyadicScalar, digits: usize) -> String {
    if x.is_zero() {
        return format!("{:.*}e0", digits.saturating_sub(1), 0.0);
    }
    let digits = digits.max(1);
    let neg = x.is_negative();
    let m = x.mantissa().abs();
    let e = x.exponent();
    // decimal exponent estimate from the binary one
    let l2 = m.bits() as i64 - 1 - e;
    let mut exp10 = (l2 as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let scaled = |exp10: i64| -> BigInt {
        // round(|x| · 10^{digits-1-exp10})
        let p = digits as i64 - 1 - exp10;
        let (mut num, mut den): (BigInt, BigInt) = (m.clone(), BigInt::one());
        if p >= 0 {
            num *= BigInt::from(10).pow(p as u32);
        } else {
            den *= BigInt::from(10).pow((-p) as u32);
        }
        if e >= 0 {
            den <<= e as usize;
        } else {
            num <<= (-e) as usize;
        }
        (BigInt::from(2) * num + &den).div_floor(&(BigInt::from(2) * den))
    };
    let lower = BigInt::from(10).pow(digits as u32 - 1);
    let upper = &lower * 10;
    let mut n = scaled(exp10);
    while n >= upper {
        exp10 += 1;
        n = scaled(exp10);
    }
    while n < lower {
        exp10 -= 1;
        n = scaled(exp10);
    }
    let s = n.to_str_radix(10);
    let body = if digits > 1 { format!("{}.{}", &s[..1], &s[1..]) } else { s };
    format!("{}{}e{}", if neg { "-" } else { "" }, body, exp10)
}
