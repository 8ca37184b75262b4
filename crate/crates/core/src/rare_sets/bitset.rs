use std::fmt::Write as _;

/// Dense bitset over the unit cells `0..2^len_log2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellBitset {
    len_log2: u32,
    words: Vec<u64>,
}

impl CellBitset {
    pub fn new(len_log2: u32) -> Self {
        let n = (1usize << len_log2).div_ceil(64);
        CellBitset { len_log2, words: vec![0; n] }
    }

    pub fn from_fn(len_log2: u32, mut f: impl FnMut(u64) -> bool) -> Self {
        let mut b = Self::new(len_log2);
        for c in 0..b.len() {
            if f(c) {
                b.set(c);
            }
        }
        b
    }

    pub fn len_log2(&self) -> u32 {
        self.len_log2
    }

    pub fn len(&self) -> u64 {
        1u64 << self.len_log2
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn set(&mut self, c: u64) {
        self.words[(c / 64) as usize] |= 1 << (c % 64);
    }

    pub fn get(&self, c: u64) -> bool {
        c < self.len() && self.words[(c / 64) as usize] >> (c % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of set cells in `start..end`.
    pub fn count_range(&self, start: u64, end: u64) -> u64 {
        let end = end.min(self.len());
        if start >= end {
            return 0;
        }
        let (sw, ew) = ((start / 64) as usize, ((end - 1) / 64) as usize);
        let lo_mask = !0u64 << (start % 64);
        let hi_mask = !0u64 >> (63 - (end - 1) % 64);
        if sw == ew {
            return (self.words[sw] & lo_mask & hi_mask).count_ones() as u64;
        }
        let mut n = (self.words[sw] & lo_mask).count_ones() as u64;
        n += self.words[sw + 1..ew].iter().map(|w| w.count_ones() as u64).sum::<u64>();
        n + (self.words[ew] & hi_mask).count_ones() as u64
    }

    pub fn and(&self, other: &CellBitset) -> CellBitset {
        assert_eq!(self.len_log2, other.len_log2);
        CellBitset {
            len_log2: self.len_log2,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn or_assign(&mut self, other: &CellBitset) {
        assert_eq!(self.len_log2, other.len_log2);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_subset_of(&self, other: &CellBitset) -> bool {
        self.len_log2 == other.len_log2
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).filter(|&c| self.get(c))
    }

    /// Big-endian hex rendering of the integer whose bit `c` is cell `c`,
    /// zero padded to `max(1, 2^len_log2 / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = (self.len() as usize).div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nib = 0u8;
            for b in 0..4 {
                if self.get((d * 4 + b) as u64) {
                    nib |= 1 << b;
                }
            }
            write!(out, "{nib:x}").unwrap();
        }
        out
    }
}
