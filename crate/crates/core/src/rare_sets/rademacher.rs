use crate::numerics::DyadicScalar;

use super::ExponentSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// The 1-periodic Rademacher function: `+1` on `[0, 1/2]`, `-1` on `(1/2, 1)`.
pub fn rademacher(t: &DyadicScalar) -> Sign {
    if t.fract() <= DyadicScalar::new(1, 1) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// `sum_j r0(t / 2^{m_j})`.
pub fn rademacher_sum(t: &DyadicScalar, seq: &ExponentSequence) -> i64 {
    seq.exponents()
        .iter()
        .map(|&m| rademacher(&t.mul_pow2(-(m as i64))).value())
        .sum()
}

/// Membership in the rare set by its defining equation
/// `sum_j r0(t / 2^{m_j}) = k` on `[0, 2^{m_k})`.
pub fn in_rare_set_by_rademacher(t: &DyadicScalar, seq: &ExponentSequence) -> bool {
    let inside = !t.is_negative() && *t < DyadicScalar::pow2(seq.top() as i64);
    inside && rademacher_sum(t, seq) == seq.k() as i64
}

/// Membership by the modulus form: `(t mod 2^e) < 2^{e-1}` for every scale `e`.
pub fn in_constraint_set_by_modulus(t: &DyadicScalar, domain_log2: u32, scales: &[u32]) -> bool {
    if t.is_negative() || *t >= DyadicScalar::pow2(domain_log2 as i64) {
        return false;
    }
    scales.iter().all(|&e| {
        let period = DyadicScalar::pow2(e as i64);
        let q = DyadicScalar::from_int(t.mul_pow2(-(e as i64)).floor());
        let rem = t - &(&q * &period);
        rem < DyadicScalar::pow2(e as i64 - 1)
    })
}

/// Sign of `r0((c + 1/2) / 2^m)`, the Rademacher value at the midpoint of unit cell `c`.
///
/// Integer specialization of [`rademacher`] used to rasterize bitsets quickly.
pub(crate) fn rademacher_at_midpoint(c: u64, m: u32) -> Sign {
    // frac((2c + 1) / 2^{m+1}) <= 1/2  <=>  (2c + 1) mod 2^{m+1} <= 2^m
    let modulus = 1u128 << (m + 1);
    if ((2 * c as u128 + 1) % modulus) <= (1u128 << m) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}
