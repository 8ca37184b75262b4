//! One-dimensional rare sets and their decompositions.
//!
//! `Y_k ⊂ [0, 2^{m_k})` is the set where the Rademacher functions at scales
//! `2^{m_1}, ..., 2^{m_k}` are all `+1`. On unit cells this is "bit `m_j - 1`
//! of the cell index is zero for every `j`", which is what the symbolic
//! engine works with. The dense engine rasterizes the defining sum directly.

mod bitset;
mod rademacher;
mod sequence;
mod set;
mod translates;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use bitset::CellBitset;
pub use rademacher::{in_constraint_set_by_modulus, in_rare_set_by_rademacher, rademacher, rademacher_sum, Sign};
pub use sequence::{lemma_violation, ExponentSequence, MAX_EXPONENT};
pub use set::{ConstraintSetJson, Engine, RareSet1D, BITSET_MAX_LOG2, CROSSCHECK_MAX_LOG2};
pub use translates::{TranslateList, ENUMERATION_CAP};


use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;
use rademacher::rademacher_at_midpoint;
use translates::expected_average_count;

/// Translate lists with at most this many entries are checked exhaustively.
pub const EXHAUSTIVE_CHECK_LIMIT: u64 = 1 << 12;

/// `Y_k` for the sequence; validation already happened in [`ExponentSequence`].
pub fn build_rare_set(seq: &ExponentSequence, engine: Engine) -> Result<RareSet1D> {
    RareSet1D::from_sequence(seq, engine)
}

/// `ceil(k / 4)`, the number of rectangle families used at depth `k`.
pub fn family_levels(k: usize) -> usize {
    k.div_ceil(4)
}

/// Translates of `[0, 2^{m_j})` indexed by `sum_{i=j}^{k-1} l_i 2^{m_i}` with
/// `0 <= l_i < 2^{m_{i+1} - m_i - 1}`; over each, `Y_k` has average `2^{-j}`.
/// There are `2^{m_k - m_j + j - k}` of them and their union is the constraint
/// set with scales `{m_{j+1}, ..., m_k}`.
pub fn level_translates(set: &RareSet1D, j: usize) -> Result<TranslateList> {
    let seq = set.require_sequence()?;
    let k = seq.k();
    if j == 0 || j > k {
        return Err(Error::out_of_range("level j", j as i64, 1, k as i64));
    }
    let block = seq.m(j);
    let forbidden: Vec<u32> = (j + 1..=k).map(|i| seq.m(i) - 1).collect();
    let target = DyadicScalar::pow2(-(j as i64));
    derive_translates(set, block, forbidden, Scan::Average(target), || format!("level translates j={j}"))
}

/// Intervals of length `2^{m_{k-j+1} - m_j}` over each of which `Y_k` has
/// average `2^{j-k}`. There are `2^{m_j + m_k - m_{k-j+1} - j}` of them and
/// their union is the constraint set with scales `{m_{k-j+1}, ..., m_k}`.
pub fn long_intervals(set: &RareSet1D, j: usize) -> Result<TranslateList> {
    let seq = set.require_sequence()?;
    let k = seq.k();
    let jmax = family_levels(k);
    if j == 0 || j > jmax {
        return Err(Error::out_of_range("level j", j as i64, 1, jmax as i64));
    }
    if !seq.level_admissible(j) {
        return Err(Error::InvalidSequence(format!(
            "m_(k-j) <= m_(k-j+1) - m_j fails at j={j}: {} > {} - {}",
            seq.m(k - j),
            seq.m(k - j + 1),
            seq.m(j)
        )));
    }
    let block = seq.m(k - j + 1) - seq.m(j);
    let forbidden: Vec<u32> = (k - j + 1..=k).map(|i| seq.m(i) - 1).collect();
    let target = DyadicScalar::pow2(j as i64 - k as i64);
    derive_translates(set, block, forbidden, Scan::Average(target), || format!("long intervals j={j}"))
}

/// Offsets `o` with `Y_k = ⋃ (o + Y_r)` disjointly; there are
/// `2^{m_k - m_r - (k - r)}` of them.
pub fn decompose_into_copies(set: &RareSet1D, r: usize) -> Result<TranslateList> {
    let seq = set.require_sequence()?;
    let k = seq.k();
    if r == 0 || r > k {
        return Err(Error::out_of_range("copy scale r", r as i64, 1, k as i64));
    }
    let block = seq.m(r);
    let forbidden: Vec<u32> = (r + 1..=k).map(|i| seq.m(i) - 1).collect();
    let prefix = seq.exponents()[..r].to_vec();
    derive_translates(set, block, forbidden, Scan::Pattern(prefix), || format!("copies of Y_{r}"))
}

enum Scan {
    /// Aligned windows with exactly this average.
    Average(DyadicScalar),
    /// Aligned windows equal, cell by cell, to the rare set of these exponents.
    Pattern(Vec<u32>),
}

fn derive_translates(
    set: &RareSet1D,
    block: u32,
    forbidden: Vec<u32>,
    scan: Scan,
    what: impl Fn() -> String,
) -> Result<TranslateList> {
    let d = set.domain_log2();
    let symbolic = if set.engine().uses_symbolic() {
        Some(TranslateList::lattice(block, d, forbidden)?)
    } else {
        None
    };
    let dense = match set.bitset() {
        Some(bits) => Some(TranslateList::from_offsets(block, d, dense_scan(bits, block, &scan)?)),
        None => None,
    };
    match (dense, symbolic) {
        (Some(b), Some(s)) => {
            let agree = match s.same_offsets(&b) {
                Some(same) => same,
                None => s.count() == b.count(),
            };
            if !agree {
                return Err(Error::EngineDisagreement {
                    quantity: what(),
                    bitset: format!("{} offsets", b.count()),
                    symbolic: format!("{} offsets", s.count()),
                });
            }
            Ok(s)
        }
        (Some(b), None) => Ok(b),
        (None, Some(s)) => Ok(s),
        (None, None) => Err(Error::Invariant("no engine selected".into())),
    }
}

fn dense_scan(bits: &CellBitset, block: u32, scan: &Scan) -> Result<Vec<BigUint>> {
    let step = 1u64 << block;
    let starts = (0..bits.len()).step_by(step as usize);
    match scan {
        Scan::Average(avg) => {
            let want = expected_average_count(avg, block)
                .ok_or_else(|| Error::Invariant(format!("average {avg} is not a cell count")))?;
            Ok(starts.filter(|&o| bits.count_range(o, o + step) == want).map(BigUint::from).collect())
        }
        Scan::Pattern(ms) => {
            let k = ms.len() as i64;
            let pattern: Vec<bool> = (0..step)
                .map(|c| ms.iter().map(|&m| rademacher_at_midpoint(c, m).value()).sum::<i64>() == k)
                .collect();
            Ok(starts
                .filter(|&o| bits.count_range(o, o + step) > 0)
                .filter(|&o| (0..step).all(|c| bits.get(o + c) == pattern[c as usize]))
                .map(BigUint::from)
                .collect())
        }
    }
}

/// Outcome of checking per-translate averages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AverageCheck {
    pub checked: u64,
    pub exhaustive: bool,
    pub ok: bool,
}

/// Check that `set` has average exactly `target` over translates in `list`:
/// all of them when there are at most [`EXHAUSTIVE_CHECK_LIMIT`], otherwise
/// the first, the last and `samples` random ones.
pub fn verify_translate_averages<R: Rng + ?Sized>(
    set: &RareSet1D,
    list: &TranslateList,
    target: &DyadicScalar,
    samples: usize,
    rng: &mut R,
) -> Result<AverageCheck> {
    let count = list.count();
    let avg_at = |o: &BigUint| set.average_over(&list.interval(o));
    if count <= BigUint::from(EXHAUSTIVE_CHECK_LIMIT) {
        let offsets = list.offsets().expect("small lists enumerate");
        let mut ok = true;
        for o in &offsets {
            ok &= &avg_at(o)? == target;
        }
        return Ok(AverageCheck { checked: offsets.len() as u64, exhaustive: true, ok });
    }
    let last = &count - BigUint::one();
    let mut picks = vec![list.get(&BigUint::from(0u8)).unwrap(), list.get(&last).unwrap()];
    picks.extend((0..samples).map(|_| list.sample(rng)));
    let mut ok = true;
    for o in &picks {
        ok &= &avg_at(o)? == target;
    }
    Ok(AverageCheck { checked: picks.len() as u64, exhaustive: false, ok })
}

/// Integer positions of length-`2^{m_j}` windows with average exactly
/// `2^{-j}` that are *not* in the indexed family of [`level_translates`].
/// Dense engine only; reported, never certified.
pub fn extra_translate_positions(set: &RareSet1D, j: usize) -> Result<Vec<u64>> {
    let bits = set
        .bitset()
        .ok_or_else(|| Error::Domain("extra positions need the bitset engine".into()))?;
    let indexed: std::collections::BTreeSet<u64> = level_translates(set, j)?
        .offsets()
        .ok_or_else(|| Error::SizeCap("indexed family too large to enumerate".into()))?
        .iter()
        .map(|o| o.to_u64().unwrap())
        .collect();
    let seq = set.require_sequence()?;
    let w = 1u64 << seq.m(j);
    let want = w >> j;
    Ok((0..=bits.len() - w)
        .filter(|o| !indexed.contains(o) && bits.count_range(*o, o + w) == want)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn y(v: &[u32]) -> RareSet1D {
        build_rare_set(&ExponentSequence::new(v.to_vec()).unwrap(), Engine::Both).unwrap()
    }

    fn offsets(t: &TranslateList) -> Vec<u64> {
        t.offsets().unwrap().iter().map(|o| o.to_u64().unwrap()).collect()
    }

    #[test]
    fn copies_examples() {
        let s = y(&[1, 2, 4, 8]);
        assert_eq!(offsets(&decompose_into_copies(&s, 4).unwrap()), vec![0]);
        assert_eq!(decompose_into_copies(&s, 1).unwrap().count(), BigUint::from(16u8));
        assert_eq!(offsets(&decompose_into_copies(&y(&[1, 2, 4]), 2).unwrap()), vec![0, 4]);
        assert!(decompose_into_copies(&s, 5).is_err());
    }

    #[test]
    fn level_translate_examples() {
        let s = y(&[1, 2, 4, 8]);
        assert_eq!(offsets(&level_translates(&s, 4).unwrap()), vec![0]);
        assert_eq!(level_translates(&s, 1).unwrap().count(), BigUint::from(16u8));
        let t = level_translates(&y(&[1, 2, 4]), 2).unwrap();
        assert_eq!(offsets(&t), vec![0, 4]);
        assert!(level_translates(&s, 0).is_err());
    }

    #[test]
    fn long_interval_examples() {
        let s = y(&[1, 2, 4, 8]);
        let t = long_intervals(&s, 1).unwrap();
        assert_eq!(t.block_length_log2(), 7);
        assert_eq!(t.count(), BigUint::one());
        let avg = s.average_over(&t.interval(&t.get(&0u8.into()).unwrap())).unwrap();
        assert_eq!(avg, DyadicScalar::pow2(-3));

        let s = y(&[1, 2, 4, 8, 16]);
        let t = long_intervals(&s, 1).unwrap();
        assert_eq!((t.block_length_log2(), t.count()), (15, BigUint::one()));
        let t = long_intervals(&s, 2).unwrap();
        assert_eq!((t.block_length_log2(), t.count()), (6, BigUint::from(256u16)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let check = verify_translate_averages(&s, &t, &DyadicScalar::pow2(-3), 0, &mut rng).unwrap();
        assert!(check.ok && check.exhaustive);
    }

    #[test]
    fn long_intervals_reject_out_of_range() {
        let s = y(&[1, 2, 4, 8]);
        assert!(matches!(long_intervals(&s, 2), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn unions_are_the_claimed_constraint_sets() {
        let s = y(&[1, 2, 4, 8, 16]);
        for j in 1..=5 {
            let t = level_translates(&s, j).unwrap();
            let want: Vec<u32> = s.scales()[j..].to_vec();
            assert_eq!(t.union_scales().unwrap(), want);
        }
        let t = long_intervals(&s, 2).unwrap();
        assert_eq!(t.union_scales().unwrap(), vec![8, 16]);
    }

    #[test]
    fn extra_positions_exist_off_the_lattice() {
        // [1, 5) also contains exactly one member cell (cell 4).
        let extra = extra_translate_positions(&y(&[1, 2, 4]), 2).unwrap();
        assert!(extra.contains(&1));
        assert!(!extra.contains(&0) && !extra.contains(&4));
    }
}
