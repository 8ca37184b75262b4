use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::bitset::CellBitset;
use super::rademacher::rademacher_at_midpoint;
use super::ExponentSequence;
use crate::error::{Error, Result};
use crate::numerics::{DyadicInterval, DyadicScalar};

/// Largest domain the dense engine will materialize (`2^24` cells).
pub const BITSET_MAX_LOG2: u32 = 24;

/// Domains at or below this size are cross-checked by the dense engine
/// whenever a certificate runs with [`Engine::Both`].
pub const CROSSCHECK_MAX_LOG2: u32 = 16;

/// Which engine answers set queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Dense unit-cell bitset.
    Bitset,
    /// Modulus-constraint algebra.
    Symbolic,
    /// Both, with every answer compared; a mismatch is an error.
    Both,
}

impl Engine {
    /// `Both` when the domain is small enough to cross-check, else `Symbolic`.
    pub fn auto(domain_log2: u32) -> Engine {
        if domain_log2 <= CROSSCHECK_MAX_LOG2 {
            Engine::Both
        } else {
            Engine::Symbolic
        }
    }

    pub fn uses_bitset(self) -> bool {
        matches!(self, Engine::Bitset | Engine::Both)
    }

    pub fn uses_symbolic(self) -> bool {
        matches!(self, Engine::Symbolic | Engine::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Bitset => "bitset",
            Engine::Symbolic => "symbolic",
            Engine::Both => "both",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bitset" => Ok(Engine::Bitset),
            "symbolic" => Ok(Engine::Symbolic),
            "both" => Ok(Engine::Both),
            other => Err(format!("unknown engine {other:?} (expected bitset|symbolic|both)")),
        }
    }
}

/// Compare the two engines' answers, or pass through whichever one ran.
pub(crate) fn reconcile<T: PartialEq + std::fmt::Debug>(
    quantity: impl FnOnce() -> String,
    bitset: Option<T>,
    symbolic: Option<T>,
) -> Result<T> {
    match (bitset, symbolic) {
        (Some(b), Some(s)) => {
            if b == s {
                Ok(s)
            } else {
                Err(Error::EngineDisagreement {
                    quantity: quantity(),
                    bitset: format!("{b:?}"),
                    symbolic: format!("{s:?}"),
                })
            }
        }
        (Some(b), None) => Ok(b),
        (None, Some(s)) => Ok(s),
        (None, None) => Err(Error::Invariant("no engine selected".into())),
    }
}

/// A subset of `[0, 2^domain_log2)` of the form
/// `{ t : (t mod 2^e) < 2^{e-1} for every e in scales }`.
///
/// The rare set `Y_k` is the case `scales = {m_1, ..., m_k}` on `[0, 2^{m_k})`.
/// The symbolic engine reads the set as "bit `e - 1` of the cell index is
/// zero for each scale `e`"; the dense engine is rasterized independently
/// from the Rademacher or modulus definition.
#[derive(Clone, Debug)]
pub struct RareSet1D {
    domain_log2: u32,
    scales: Vec<u32>,
    sequence: Option<ExponentSequence>,
    engine: Engine,
    bits: Option<Arc<CellBitset>>,
}

impl RareSet1D {
    /// `Y_k` for the given sequence.
    pub fn from_sequence(seq: &ExponentSequence, engine: Engine) -> Result<Self> {
        let d = seq.top();
        let bits = if engine.uses_bitset() {
            check_bitset_size(d)?;
            let ms = seq.exponents().to_vec();
            let k = ms.len() as i64;
            Some(Arc::new(CellBitset::from_fn(d, |c| {
                ms.iter().map(|&m| rademacher_at_midpoint(c, m).value()).sum::<i64>() == k
            })))
        } else {
            None
        };
        Ok(RareSet1D {
            domain_log2: d,
            scales: seq.exponents().to_vec(),
            sequence: Some(seq.clone()),
            engine,
            bits,
        })
    }

    /// The constraint set with the given scales on `[0, 2^domain_log2)`.
    pub fn constraint(domain_log2: u32, scales: &[u32], engine: Engine) -> Result<Self> {
        let mut sorted = scales.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!("constraint scales must be distinct: {scales:?}")));
        }
        if let Some(&e) = sorted.iter().find(|&&e| e == 0 || e > domain_log2) {
            return Err(Error::Domain(format!(
                "constraint scale {e} outside 1..={domain_log2}"
            )));
        }
        let bits = if engine.uses_bitset() {
            check_bitset_size(domain_log2)?;
            Some(Arc::new(CellBitset::from_fn(domain_log2, |c| {
                sorted.iter().all(|&e| c % (1u64 << e) < (1u64 << (e - 1)))
            })))
        } else {
            None
        };
        Ok(RareSet1D { domain_log2, scales: sorted, sequence: None, engine, bits })
    }

    pub fn domain_log2(&self) -> u32 {
        self.domain_log2
    }

    /// Sorted, distinct constraint scales.
    pub fn scales(&self) -> &[u32] {
        &self.scales
    }

    pub fn sequence(&self) -> Option<&ExponentSequence> {
        self.sequence.as_ref()
    }

    pub(crate) fn require_sequence(&self) -> Result<&ExponentSequence> {
        self.sequence
            .as_ref()
            .ok_or_else(|| Error::Domain("operation requires a rare set built from a sequence".into()))
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn bitset(&self) -> Option<&CellBitset> {
        self.bits.as_deref()
    }

    /// Same set answered by a different engine.
    pub fn with_engine(&self, engine: Engine) -> Result<Self> {
        match &self.sequence {
            Some(seq) => Self::from_sequence(seq, engine),
            None => Self::constraint(self.domain_log2, &self.scales, engine),
        }
    }

    /// Forbidden bit positions `e - 1`, ascending.
    pub(crate) fn forbidden_bits(&self) -> Vec<u32> {
        self.scales.iter().map(|e| e - 1).collect()
    }

    fn domain_len(&self) -> BigUint {
        BigUint::one() << self.domain_log2 as usize
    }

    pub fn contains_cell(&self, c: &BigUint) -> Result<bool> {
        let bitset = self.bits.as_ref().map(|b| c.to_u64().is_some_and(|c| b.get(c)));
        let symbolic = self.engine.uses_symbolic().then(|| {
            c < &self.domain_len() && self.scales.iter().all(|&e| !c.bit(e as u64 - 1))
        });
        reconcile(|| format!("membership of cell {c}"), bitset, symbolic)
    }

    /// Membership of an arbitrary dyadic point, by the cell containing it.
    pub fn contains_point(&self, t: &DyadicScalar) -> Result<bool> {
        if t.is_negative() {
            return Ok(false);
        }
        match t.floor().to_biguint() {
            Some(c) => self.contains_cell(&c),
            None => Ok(false),
        }
    }

    /// Number of member cells in `start .. start + len`.
    pub fn count_cells(&self, start: &BigUint, len: &BigUint) -> Result<BigUint> {
        let end = start + len;
        if end > self.domain_len() {
            return Err(Error::Domain(format!(
                "cells {start}..{end} leave the domain [0, 2^{})",
                self.domain_log2
            )));
        }
        let bitset = self.bits.as_ref().map(|b| {
            BigUint::from(b.count_range(start.to_u64().unwrap(), end.to_u64().unwrap()))
        });
        let symbolic = self.engine.uses_symbolic().then(|| {
            let f = self.forbidden_bits();
            count_free_below(&end, &f) - count_free_below(start, &f)
        });
        reconcile(|| format!("cell count on {start}..{end}"), bitset, symbolic)
    }

    /// Exact Lebesgue measure, `2^{domain - #scales}` symbolically.
    pub fn measure(&self) -> Result<DyadicScalar> {
        let bitset = self.bits.as_ref().map(|b| DyadicScalar::from_int(b.count()));
        let symbolic = self.engine.uses_symbolic().then(|| {
            // Distinct scales constrain distinct bits, so each halves the measure.
            DyadicScalar::pow2(self.domain_log2 as i64 - self.scales.len() as i64)
        });
        reconcile(|| format!("measure of constraint set {:?}", self.scales), bitset, symbolic)
    }

    /// `mu(set ∩ interval) / mu(interval)` for an interval on the unit grid.
    pub fn average_over(&self, interval: &DyadicInterval) -> Result<DyadicScalar> {
        let (start, len) = interval.unit_cells()?;
        let n = self.count_cells(&start, &len)?;
        Ok(DyadicScalar::from_biguint(&n).mul_pow2(-interval.length_log2))
    }

    pub fn intersect(&self, other: &RareSet1D) -> Result<RareSet1D> {
        if self.domain_log2 != other.domain_log2 {
            return Err(Error::Domain("intersection of sets on different domains".into()));
        }
        let mut scales = self.scales.clone();
        for &e in &other.scales {
            if !scales.contains(&e) {
                scales.push(e);
            }
        }
        scales.sort_unstable();
        let engine = combine(self.engine, other.engine);
        let bits = match (&self.bits, &other.bits) {
            (Some(a), Some(b)) if engine.uses_bitset() => Some(Arc::new(a.and(b))),
            _ if engine.uses_bitset() => {
                return Self::constraint(self.domain_log2, &scales, engine);
            }
            _ => None,
        };
        Ok(RareSet1D { domain_log2: self.domain_log2, scales, sequence: None, engine, bits })
    }

    pub fn is_subset_of(&self, other: &RareSet1D) -> Result<bool> {
        if self.domain_log2 != other.domain_log2 {
            return Ok(false);
        }
        let bitset = match (&self.bits, &other.bits) {
            (Some(a), Some(b)) => Some(a.is_subset_of(b)),
            _ => None,
        };
        let symbolic = (self.engine.uses_symbolic() || bitset.is_none())
            .then(|| other.scales.iter().all(|e| self.scales.contains(e)));
        reconcile(|| "subset relation".to_string(), bitset, symbolic)
    }

    /// Constraint-set JSON, `{"domain_log2": d, "scales": [...]}`.
    pub fn constraint_json(&self) -> ConstraintSetJson {
        ConstraintSetJson { domain_log2: self.domain_log2, scales: self.scales.clone() }
    }

    /// Hex export of the dense form, for domains up to `2^16`.
    pub fn to_hex(&self) -> Result<String> {
        if self.domain_log2 > CROSSCHECK_MAX_LOG2 {
            return Err(Error::SizeCap(format!(
                "hex export is limited to m_k <= {CROSSCHECK_MAX_LOG2}"
            )));
        }
        match &self.bits {
            Some(b) => Ok(b.to_hex()),
            None => Ok(self.with_engine(Engine::Bitset)?.bits.unwrap().to_hex()),
        }
    }
}

fn combine(a: Engine, b: Engine) -> Engine {
    match (a.uses_bitset() && b.uses_bitset(), a.uses_symbolic() || b.uses_symbolic()) {
        (true, true) => Engine::Both,
        (true, false) => Engine::Bitset,
        _ => Engine::Symbolic,
    }
}

fn check_bitset_size(d: u32) -> Result<()> {
    if d > BITSET_MAX_LOG2 {
        Err(Error::SizeCap(format!(
            "bitset engine needs m_k <= {BITSET_MAX_LOG2}, got {d}"
        )))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSetJson {
    pub domain_log2: u32,
    pub scales: Vec<u32>,
}

/// `#{ c < n : c has a zero at every position in forbidden }`.
///
/// Walks the forbidden positions from the top. Between two forbidden
/// positions every set bit `p` of `n` contributes `2^{p - #forbidden below p}`,
/// which sums to the segment's value shifted down by that count.
pub(crate) fn count_free_below(n: &BigUint, forbidden: &[u32]) -> BigUint {
    let mut f: Vec<u32> = forbidden.to_vec();
    f.sort_unstable();
    let mut count = BigUint::zero();
    let mut hi: Option<u64> = None; // exclusive upper bit of the current segment
    for idx in (0..f.len()).rev() {
        let pos = f[idx] as u64;
        let below = idx as u64; // forbidden positions strictly below pos
        count += segment(n, pos + 1, hi) << (pos + 1 - (below + 1)) as usize;
        if n.bit(pos) {
            // c takes a 0 here with n's prefix above; every prefix extending
            // n's 1 at this forbidden bit is invalid.
            count += BigUint::one() << (pos - below) as usize;
            return count;
        }
        hi = Some(pos);
    }
    count + segment(n, 0, hi)
}

/// Bits `lo..hi` of `n` as an integer (`hi = None` means all high bits).
fn segment(n: &BigUint, lo: u64, hi: Option<u64>) -> BigUint {
    let shifted = n >> lo as usize;
    match hi {
        None => shifted,
        Some(hi) if hi <= lo => BigUint::zero(),
        Some(hi) => shifted & ((BigUint::one() << (hi - lo) as usize) - 1u8),
    }
}

/// Dense fallback used by tests to check [`count_free_below`].
#[cfg(test)]
pub(crate) fn count_free_below_naive(n: u64, forbidden: &[u32]) -> u64 {
    (0..n).filter(|c| forbidden.iter().all(|&p| c >> p & 1 == 0)).count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u32]) -> ExponentSequence {
        ExponentSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn free_count_matches_naive() {
        let cases: &[&[u32]] = &[&[], &[0], &[3], &[0, 1, 3], &[1, 4, 7], &[2, 5, 9]];
        for f in cases {
            for n in 0..1100u64 {
                assert_eq!(
                    count_free_below(&BigUint::from(n), f),
                    BigUint::from(count_free_below_naive(n, f)),
                    "n={n} f={f:?}"
                );
            }
        }
    }

    #[test]
    fn build_examples() {
        let y = RareSet1D::from_sequence(&seq(&[1, 2]), Engine::Both).unwrap();
        assert_eq!(y.bitset().unwrap().ones().collect::<Vec<_>>(), vec![0]);
        assert_eq!(y.measure().unwrap(), DyadicScalar::one());

        let y = RareSet1D::from_sequence(&seq(&[1, 2, 4]), Engine::Both).unwrap();
        assert_eq!(y.bitset().unwrap().ones().collect::<Vec<_>>(), vec![0, 4]);
        assert_eq!(y.measure().unwrap(), DyadicScalar::from_int(2));

        let y = RareSet1D::from_sequence(&seq(&[1]), Engine::Both).unwrap();
        assert_eq!(y.measure().unwrap(), DyadicScalar::one());
    }

    #[test]
    fn measure_examples() {
        let y = RareSet1D::from_sequence(&seq(&[1, 2, 4, 8]), Engine::Both).unwrap();
        assert_eq!(y.measure().unwrap(), DyadicScalar::from_int(16));
        let all = RareSet1D::constraint(8, &[], Engine::Both).unwrap();
        assert_eq!(all.measure().unwrap(), DyadicScalar::from_int(256));
        let c = RareSet1D::constraint(8, &[2, 8], Engine::Both).unwrap();
        assert_eq!(c.measure().unwrap(), DyadicScalar::from_int(64));
    }

    #[test]
    fn average_examples() {
        let y = RareSet1D::from_sequence(&seq(&[1, 2, 4, 8]), Engine::Both).unwrap();
        let i = DyadicInterval::new(DyadicScalar::zero(), 2);
        assert_eq!(y.average_over(&i).unwrap(), DyadicScalar::pow2(-2));
        let i = DyadicInterval::new(DyadicScalar::zero(), 8);
        assert_eq!(y.average_over(&i).unwrap(), DyadicScalar::pow2(-4));

        let y = RareSet1D::from_sequence(&seq(&[1, 2, 4]), Engine::Both).unwrap();
        let i = DyadicInterval::new(DyadicScalar::from_int(4), 2);
        assert_eq!(y.average_over(&i).unwrap(), DyadicScalar::pow2(-2));
    }

    #[test]
    fn average_out_of_domain() {
        let y = RareSet1D::from_sequence(&seq(&[1, 2, 4]), Engine::Symbolic).unwrap();
        let i = DyadicInterval::new(DyadicScalar::from_int(14), 2);
        assert!(matches!(y.average_over(&i), Err(Error::Domain(_))));
    }

    #[test]
    fn disagreement_is_reported() {
        let r = reconcile(|| "x".into(), Some(1), Some(2));
        assert!(matches!(r, Err(Error::EngineDisagreement { .. })));
    }

    #[test]
    fn bitset_cap() {
        let s = ExponentSequence::doubling(1, 6).unwrap(); // m_k = 32
        assert!(matches!(RareSet1D::from_sequence(&s, Engine::Both), Err(Error::SizeCap(_))));
        assert!(RareSet1D::from_sequence(&s, Engine::Symbolic).is_ok());
    }

    #[test]
    fn intersections_and_subsets() {
        let a = RareSet1D::constraint(8, &[4, 8], Engine::Both).unwrap();
        let b = RareSet1D::constraint(8, &[2, 8], Engine::Both).unwrap();
        let ab = a.intersect(&b).unwrap();
        assert_eq!(ab.scales(), &[2, 4, 8]);
        assert_eq!(ab.measure().unwrap(), DyadicScalar::from_int(32));
        assert!(ab.is_subset_of(&a).unwrap());
        assert!(!a.is_subset_of(&b).unwrap());
    }
}
