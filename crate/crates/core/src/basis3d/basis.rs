use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rare_sets::{ExponentSequence, MAX_EXPONENT};

/// The admissible area exponents `S`: boxes with sides `s, 2^N / s, t` and `N ∈ S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpec {
    Finite(BTreeSet<u32>),
    /// `{m1 · 2^i : i >= 0}`.
    Doubling { m1: u32 },
    /// `{n : n >= m0}`.
    AllFrom { m0: u32 },
}

impl BasisSpec {
    pub fn finite(s: impl IntoIterator<Item = u32>) -> Result<Self> {
        let set: BTreeSet<u32> = s.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyBasis);
        }
        if set.contains(&0) {
            return Err(Error::InvalidSequence("S must contain only positive exponents".into()));
        }
        Ok(BasisSpec::Finite(set))
    }

    pub fn doubling(m1: u32) -> Result<Self> {
        if m1 == 0 {
            return Err(Error::InvalidSequence("m_1 must be at least 1".into()));
        }
        Ok(BasisSpec::Doubling { m1 })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BasisSpec::Finite(_))
    }

    pub fn contains(&self, n: u32) -> bool {
        match self {
            BasisSpec::Finite(s) => s.contains(&n),
            BasisSpec::Doubling { m1 } => n >= *m1 && n.is_multiple_of(*m1) && (n / m1).is_power_of_two(),
            BasisSpec::AllFrom { m0 } => n >= (*m0).max(1),
        }
    }

    /// Smallest element of `S` that is `>= n`.
    pub fn next_at_least(&self, n: u64) -> Option<u32> {
        match self {
            BasisSpec::Finite(s) => s.range(u32::try_from(n).ok()?..).next().copied(),
            BasisSpec::Doubling { m1 } => {
                let mut m = *m1 as u64;
                while m < n {
                    m *= 2;
                }
                u32::try_from(m).ok()
            }
            BasisSpec::AllFrom { m0 } => u32::try_from(n.max((*m0).max(1) as u64)).ok(),
        }
    }

    /// Greedy chain `m_1 = min S`, `m_{j+1} = min{m ∈ S : m >= 2 m_j}`, cut at
    /// `limit` terms or at [`MAX_EXPONENT`].
    fn greedy_chain(&self, limit: usize) -> Vec<u32> {
        let mut chain = Vec::new();
        let mut next = self.next_at_least(1);
        while let Some(m) = next {
            if chain.len() == limit || m > MAX_EXPONENT {
                break;
            }
            chain.push(m);
            next = self.next_at_least(2 * m as u64);
        }
        chain
    }

    /// Longest chain in `S` under `2a <= b`; `None` for infinite rules.
    /// The greedy chain attains it: swapping any chain's first `i` terms for
    /// the greedy ones never blocks the rest.
    pub fn capacity(&self) -> Option<usize> {
        self.is_finite().then(|| self.greedy_chain(usize::MAX).len())
    }

    /// The first `k` terms of the greedy doubling chain.
    pub fn doubling_subsequence(&self, k: usize) -> Result<ExponentSequence> {
        if k == 0 {
            return Err(Error::out_of_range("k", 0, 1, i64::MAX));
        }
        let chain = self.greedy_chain(k);
        if chain.len() < k {
            return Err(match self {
                BasisSpec::Finite(_) => Error::Capacity { requested: k, capacity: chain.len() },
                _ => Error::SizeCap(format!("exponent cap {MAX_EXPONENT} reached after {} terms", chain.len())),
            });
        }
        ExponentSequence::new(chain)
    }
}
