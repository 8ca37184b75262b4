use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{DyadicInterval, DyadicScalar};

/// Offsets are materialized only up to this many entries.
pub const ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Offsets {
    /// `{ o < 2^domain : o ≡ 0 mod 2^block, bit p of o is 0 for p in forbidden }`.
    Lattice { forbidden: Vec<u32> },
    /// An explicit list, as produced by a dense scan or a test fixture.
    Explicit(Vec<BigUint>),
}

/// Translates `[o, o + 2^block_length_log2)` of one block inside `[0, 2^domain_log2)`.
///
/// Lattice lists can be astronomically long; they answer `count`, `get` and
/// random sampling without enumerating.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslateList {
    block_length_log2: u32,
    domain_log2: u32,
    offsets: Offsets,
}

impl TranslateList {
    pub(crate) fn lattice(block_length_log2: u32, domain_log2: u32, forbidden: Vec<u32>) -> Result<Self> {
        let mut f = forbidden;
        f.sort_unstable();
        f.dedup();
        if f.iter().any(|&p| p < block_length_log2 || p >= domain_log2) {
            return Err(Error::Invariant(format!(
                "lattice constraint bits {f:?} must lie in {block_length_log2}..{domain_log2}"
            )));
        }
        Ok(TranslateList { block_length_log2, domain_log2, offsets: Offsets::Lattice { forbidden: f } })
    }

    /// An explicit list of offsets. Nothing about disjointness is assumed.
    pub fn from_offsets(block_length_log2: u32, domain_log2: u32, offsets: Vec<BigUint>) -> Self {
        TranslateList { block_length_log2, domain_log2, offsets: Offsets::Explicit(offsets) }
    }

    pub fn block_length_log2(&self) -> u32 {
        self.block_length_log2
    }

    pub fn domain_log2(&self) -> u32 {
        self.domain_log2
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.offsets, Offsets::Lattice { .. })
    }

    pub fn count(&self) -> BigUint {
        match &self.offsets {
            Offsets::Lattice { forbidden } => {
                BigUint::one() << self.free_bits(forbidden) as usize
            }
            Offsets::Explicit(v) => BigUint::from(v.len()),
        }
    }

    fn free_bits(&self, forbidden: &[u32]) -> u32 {
        self.domain_log2 - self.block_length_log2 - forbidden.len() as u32
    }

    pub fn is_enumerable(&self) -> bool {
        self.count() <= BigUint::from(ENUMERATION_CAP)
    }

    /// The `n`-th offset. Lattice offsets are increasing in `n`.
    pub fn get(&self, n: &BigUint) -> Option<BigUint> {
        if n >= &self.count() {
            return None;
        }
        match &self.offsets {
            Offsets::Explicit(v) => v.get(n.to_usize()?).cloned(),
            Offsets::Lattice { forbidden } => Some(self.deposit(n, forbidden)),
        }
    }

    /// Spread the bits of `n` over the free positions `block..domain` skipping `forbidden`.
    fn deposit(&self, n: &BigUint, forbidden: &[u32]) -> BigUint {
        let mut out = BigUint::zero();
        let mut pos = self.block_length_log2;
        let mut consumed = 0u32;
        let bounds = forbidden.iter().copied().chain(std::iter::once(self.domain_log2));
        for stop in bounds {
            let width = stop - pos;
            if width > 0 {
                let chunk = (n >> consumed as usize) & ((BigUint::one() << width as usize) - 1u8);
                out |= chunk << pos as usize;
                consumed += width;
            }
            pos = stop + 1;
        }
        out
    }

    /// All offsets, when there are at most [`ENUMERATION_CAP`] of them.
    pub fn offsets(&self) -> Option<Vec<BigUint>> {
        match &self.offsets {
            Offsets::Explicit(v) => Some(v.clone()),
            Offsets::Lattice { forbidden } => {
                if !self.is_enumerable() {
                    return None;
                }
                let n = self.count().to_u64().unwrap();
                Some((0..n).map(|i| self.deposit(&BigUint::from(i), forbidden)).collect())
            }
        }
    }

    /// One uniformly random offset.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BigUint {
        let count = self.count();
        let bits = count.bits();
        // rejection sampling below `count`
        loop {
            let words = bits.div_ceil(32) as usize;
            let mut digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
            if let Some(last) = digits.last_mut() {
                let extra = words as u64 * 32 - bits;
                if extra > 0 {
                    *last &= u32::MAX >> extra;
                }
            }
            let n = BigUint::from_slice(&digits);
            if n < count {
                return self.get(&n).unwrap();
            }
        }
    }

    pub fn interval(&self, offset: &BigUint) -> DyadicInterval {
        DyadicInterval::from_cell(offset, self.block_length_log2)
    }

    /// Scales of the constraint set equal to the union of a lattice list.
    pub fn union_scales(&self) -> Option<Vec<u32>> {
        match &self.offsets {
            Offsets::Lattice { forbidden } => Some(forbidden.iter().map(|p| p + 1).collect()),
            Offsets::Explicit(_) => None,
        }
    }

    /// Same offsets as a set. Compares lattices structurally and
    /// explicit lists after sorting.
    pub fn same_offsets(&self, other: &TranslateList) -> Option<bool> {
        if self.block_length_log2 != other.block_length_log2 || self.domain_log2 != other.domain_log2 {
            return Some(false);
        }
        if let (Offsets::Lattice { forbidden: a }, Offsets::Lattice { forbidden: b }) =
            (&self.offsets, &other.offsets)
        {
            return Some(a == b);
        }
        let mut a = self.offsets()?;
        let mut b = other.offsets()?;
        a.sort();
        b.sort();
        Some(a == b)
    }

    /// Walk every lattice offset in increasing order on `u128` and check
    /// consecutive gaps and the last right end.
    fn lattice_gaps_ok(&self, forbidden: &[u32]) -> bool {
        let block = 1u128 << self.block_length_log2;
        let domain = 1u128 << self.domain_log2;
        let free = forbidden.iter().fold((domain - 1) & !(block - 1), |m, &p| m & !(1u128 << p));
        let mut o = 0u128;
        loop {
            if o + block > domain {
                return false;
            }
            // next integer whose set bits are all free
            let next = (o | !free).wrapping_add(1) & free;
            if next == 0 {
                return true;
            }
            if next - o < block {
                return false;
            }
            o = next;
        }
    }

    /// Pairwise a.e. disjointness of the translates.
    ///
    /// Enumerable lists are checked exhaustively: after sorting, every pair is
    /// disjoint iff consecutive offsets differ by at least the block length and
    /// the last translate ends inside the domain. Lattice lists are disjoint by
    /// construction (distinct multiples of the block length); that structure is
    /// checked and `sample` random pairs are tested directly on top of it.
    pub fn is_pairwise_disjoint<R: Rng + ?Sized>(&self, sample: usize, rng: &mut R) -> bool {
        if let (Offsets::Lattice { forbidden }, true) = (&self.offsets, self.domain_log2 < 128 && self.is_enumerable()) {
            return self.lattice_gaps_ok(forbidden);
        }
        let block = BigUint::one() << self.block_length_log2 as usize;
        let domain = BigUint::one() << self.domain_log2 as usize;
        if let Some(mut v) = self.offsets() {
            v.sort();
            let gaps_ok = v.windows(2).all(|w| &w[1] - &w[0] >= block);
            let fits = v.last().is_none_or(|o| o + &block <= domain);
            return gaps_ok && fits;
        }
        let Offsets::Lattice { forbidden } = &self.offsets else { unreachable!() };
        let structural = forbidden.iter().all(|&p| p >= self.block_length_log2 && p < self.domain_log2);
        let sampled = (0..sample).all(|_| {
            let (a, b) = (self.sample(rng), self.sample(rng));
            a == b || {
                let gap = if a > b { &a - &b } else { &b - &a };
                gap >= block && (&a % &block).is_zero() && (&b % &block).is_zero()
            }
        });
        structural && sampled
    }
}

/// Exact average of a set over one translate, as a fraction of the block.
pub(crate) fn expected_average_count(avg: &DyadicScalar, block_log2: u32) -> Option<u64> {
    avg.mul_pow2(block_log2 as i64).to_biguint()?.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lattice_enumeration_matches_definition() {
        let t = TranslateList::lattice(1, 8, vec![3, 7]).unwrap();
        let brute: Vec<BigUint> = (0u32..256)
            .filter(|o| o % 2 == 0 && o >> 3 & 1 == 0 && o >> 7 & 1 == 0)
            .map(BigUint::from)
            .collect();
        assert_eq!(t.offsets().unwrap(), brute);
        assert_eq!(t.count(), BigUint::from(brute.len()));
    }

    #[test]
    fn duplicated_offset_is_not_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let good = TranslateList::from_offsets(2, 4, vec![0u8.into(), 4u8.into(), 12u8.into()]);
        assert!(good.is_pairwise_disjoint(0, &mut rng));
        let bad = TranslateList::from_offsets(2, 4, vec![0u8.into(), 4u8.into(), 4u8.into()]);
        assert!(!bad.is_pairwise_disjoint(0, &mut rng));
        let overlapping = TranslateList::from_offsets(2, 4, vec![0u8.into(), 2u8.into()]);
        assert!(!overlapping.is_pairwise_disjoint(0, &mut rng));
    }

    #[test]
    fn symbolic_lists_sample_within_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = TranslateList::lattice(3, 200, vec![10, 50, 199]).unwrap();
        assert!(!t.is_enumerable());
        for _ in 0..100 {
            let o = t.sample(&mut rng);
            assert!(!o.bit(10) && !o.bit(50) && !o.bit(199));
            assert!((&o % 8u8).is_zero());
        }
        assert!(t.is_pairwise_disjoint(100, &mut rng));
    }

    #[test]
    fn lattice_walk_agrees_with_explicit_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (b, d, f) in [(0u32, 6u32, vec![]), (1, 8, vec![3, 7]), (2, 10, vec![2, 5, 9]), (0, 0, vec![]), (80, 100, vec![85, 99])] {
            let lat = TranslateList::lattice(b, d, f).unwrap();
            let explicit = TranslateList::from_offsets(b, d, lat.offsets().unwrap());
            assert!(lat.is_pairwise_disjoint(0, &mut rng));
            assert!(explicit.is_pairwise_disjoint(0, &mut rng));
        }
    }
}
