use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::DyadicScalar;
use crate::error::{Error, Result};

/// Half-open interval `[left, left + 2^length_log2)` with a dyadic left end.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub left: DyadicScalar,
    pub length_log2: i64,
}

impl DyadicInterval {
    pub fn new(left: DyadicScalar, length_log2: i64) -> Self {
        DyadicInterval { left, length_log2 }
    }

    pub fn from_cell(left: &BigUint, length_log2: u32) -> Self {
        DyadicInterval { left: DyadicScalar::from_biguint(left), length_log2: length_log2 as i64 }
    }

    pub fn length(&self) -> DyadicScalar {
        DyadicScalar::pow2(self.length_log2)
    }

    pub fn right(&self) -> DyadicScalar {
        &self.left + &self.length()
    }

    pub fn contains(&self, t: &DyadicScalar) -> bool {
        &self.left <= t && t < &self.right()
    }

    /// True when the interiors intersect, i.e. the overlap has positive length.
    pub fn overlaps(&self, other: &DyadicInterval) -> bool {
        self.left < other.right() && other.left < self.right()
    }

    /// Left end and length as unit-cell integers, for intervals on the unit grid.
    pub fn unit_cells(&self) -> Result<(BigUint, BigUint)> {
        if self.length_log2 < 0 {
            return Err(Error::Domain(format!(
                "interval length 2^{} is below the unit-cell grid",
                self.length_log2
            )));
        }
        let start = self.left.to_biguint().ok_or_else(|| {
            Error::Domain(format!("interval left end {} is not a non-negative integer", self.left))
        })?;
        Ok((start, BigUint::from(1u8) << (self.length_log2 as usize)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_is_interior_overlap() {
        let a = DyadicInterval::new(DyadicScalar::zero(), 2);
        let b = DyadicInterval::new(DyadicScalar::from_int(4), 2);
        let c = DyadicInterval::new(DyadicScalar::from_int(3), 0);
        assert!(!a.overlaps(&b));
        assert!(a.overlaps(&c));
        assert!(a.contains(&DyadicScalar::new(7, 1)));
        assert!(!a.contains(&DyadicScalar::from_int(4)));
    }

    #[test]
    fn off_grid_rejected() {
        let a = DyadicInterval::new(DyadicScalar::new(1, 1), 2);
        assert!(a.unit_cells().is_err());
        let b = DyadicInterval::new(DyadicScalar::zero(), -1);
        assert!(b.unit_cells().is_err());
    }
}
