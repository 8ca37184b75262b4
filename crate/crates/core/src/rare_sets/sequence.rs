use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest scale exponent accepted. Measures reach `2^(2 m_k)`, which stays
/// cheap well past this.
pub const MAX_EXPONENT: u32 = 1 << 16;

/// Strictly increasing scale exponents `m_1 < ... < m_k`, all at least one,
/// satisfying `m_{k-j} <= m_{k-j+1} - m_j` for every `1 <= j <= k/2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct ExponentSequence {
    exponents: Vec<u32>,
}

impl ExponentSequence {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        check_increasing(&exponents)?;
        if let Some(msg) = lemma_violation(&exponents) {
            return Err(Error::InvalidSequence(msg));
        }
        Ok(ExponentSequence { exponents })
    }

    /// `m_j = m1 * 2^(j-1)` for `j = 1..=k`.
    pub fn doubling(m1: u32, k: usize) -> Result<Self> {
        if m1 == 0 {
            return Err(Error::InvalidSequence("m_1 must be at least 1".into()));
        }
        if k == 0 {
            return Err(Error::InvalidSequence("sequence must be nonempty".into()));
        }
        let mut out = Vec::with_capacity(k);
        let mut m = m1 as u64;
        for _ in 0..k {
            if m > MAX_EXPONENT as u64 {
                return Err(Error::InvalidSequence(format!(
                    "doubling sequence from m_1={m1} with k={k} exceeds the exponent cap {MAX_EXPONENT}"
                )));
            }
            out.push(m as u32);
            m *= 2;
        }
        Self::new(out)
    }

    pub fn k(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// `m_j`, one-based. `m(0)` is taken to be `0`.
    pub fn m(&self, j: usize) -> u32 {
        if j == 0 {
            0
        } else {
            self.exponents[j - 1]
        }
    }

    /// `m_k`, the log2 of the domain length.
    pub fn top(&self) -> u32 {
        *self.exponents.last().expect("nonempty")
    }

    /// `(m_1, ..., m_r)`, revalidated.
    pub fn prefix(&self, r: usize) -> Result<Self> {
        if r == 0 || r > self.k() {
            return Err(Error::out_of_range("prefix length r", r as i64, 1, self.k() as i64));
        }
        Self::new(self.exponents[..r].to_vec())
    }

    /// `2 m_j <= m_{j+1}` for all `j`.
    pub fn is_doubling(&self) -> bool {
        self.exponents.windows(2).all(|w| 2 * w[0] as u64 <= w[1] as u64)
    }

    pub fn require_doubling(&self) -> Result<()> {
        match self.exponents.windows(2).position(|w| 2 * w[0] as u64 > w[1] as u64) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidSequence(format!(
                "2 m_j <= m_(j+1) fails at j={}: 2*{} > {}",
                i + 1,
                self.exponents[i],
                self.exponents[i + 1]
            ))),
        }
    }

    /// The admissibility inequality used by the level-`j` construction, with
    /// `m_0 = 0` so that it is vacuous when `k = j`.
    pub fn level_admissible(&self, j: usize) -> bool {
        let k = self.k();
        j >= 1 && j <= k && self.m(k - j) as u64 + self.m(j) as u64 <= self.m(k - j + 1) as u64
    }
}

impl TryFrom<Vec<u32>> for ExponentSequence {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ExponentSequence> for Vec<u32> {
    fn from(s: ExponentSequence) -> Vec<u32> {
        s.exponents
    }
}

fn check_increasing(ms: &[u32]) -> Result<()> {
    if ms.is_empty() {
        return Err(Error::InvalidSequence("sequence must be nonempty".into()));
    }
    if ms[0] == 0 {
        return Err(Error::InvalidSequence("all exponents must be at least 1 (m_1 = 0)".into()));
    }
    if let Some(&m) = ms.iter().find(|&&m| m > MAX_EXPONENT) {
        return Err(Error::InvalidSequence(format!(
            "exponent {m} exceeds the cap {MAX_EXPONENT}"
        )));
    }
    if let Some(i) = ms.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSequence(format!(
            "exponents must be strictly increasing: m_{} = {} >= m_{} = {}",
            i + 1,
            ms[i],
            i + 2,
            ms[i + 1]
        )));
    }
    Ok(())
}

/// Describes the first `j <= k/2` where `m_{k-j} <= m_{k-j+1} - m_j` fails.
pub fn lemma_violation(ms: &[u32]) -> Option<String> {
    let k = ms.len();
    let m = |i: usize| ms[i - 1] as i64;
    (1..=k / 2).find_map(|j| {
        let lhs = m(k - j);
        let rhs = m(k - j + 1) - m(j);
        (lhs > rhs).then(|| {
            format!(
                "m_(k-j) <= m_(k-j+1) - m_j fails at j={j}: m_{} = {lhs} > m_{} - m_{j} = {rhs}",
                k - j,
                k - j + 1
            )
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_doubling() {
        let s = ExponentSequence::doubling(1, 5).unwrap();
        assert_eq!(s.exponents(), &[1, 2, 4, 8, 16]);
        assert!(s.is_doubling());
        assert_eq!(s.top(), 16);
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(ExponentSequence::new(vec![2, 2]).is_err());
        assert!(ExponentSequence::new(vec![0, 2]).is_err());
        assert!(ExponentSequence::new(vec![]).is_err());
    }

    #[test]
    fn names_violated_inequality() {
        // j = 1: m_2 = 3 <= m_3 - m_1 = 2 fails.
        let err = ExponentSequence::new(vec![2, 3, 4]).unwrap_err().to_string();
        assert!(err.contains("fails at j=1"), "{err}");
        // (1,2,3) satisfies 2 <= 3 - 1.
        assert!(ExponentSequence::new(vec![1, 2, 3]).is_ok());
    }

    #[test]
    fn doubling_implies_lemma_admissible() {
        for m1 in 1..4 {
            for k in 1..10 {
                assert!(ExponentSequence::doubling(m1, k).is_ok());
            }
        }
    }

    #[test]
    fn level_admissibility_with_m0() {
        let s = ExponentSequence::new(vec![3]).unwrap();
        assert!(s.level_admissible(1));
    }
}
