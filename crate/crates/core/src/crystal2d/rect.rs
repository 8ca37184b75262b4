use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{DyadicInterval, DyadicScalar};
use crate::rare_sets::{Engine, ExponentSequence, RareSet1D};

/// The crystal `Q_k = Y_k × Y_k ⊂ [0, 2^{m_k})²`.
#[derive(Clone, Debug)]
pub struct Crystal2D {
    set: RareSet1D,
}

impl Crystal2D {
    pub fn new(seq: &ExponentSequence, engine: Engine) -> Result<Self> {
        Ok(Crystal2D { set: RareSet1D::from_sequence(seq, engine)? })
    }

    pub fn from_set(set: RareSet1D) -> Self {
        Crystal2D { set }
    }

    pub fn sequence(&self) -> &ExponentSequence {
        self.set.sequence().expect("crystal sets come from sequences")
    }

    pub fn x_set(&self) -> &RareSet1D {
        &self.set
    }

    pub fn y_set(&self) -> &RareSet1D {
        &self.set
    }

    pub fn engine(&self) -> Engine {
        self.set.engine()
    }

    pub fn domain_log2(&self) -> u32 {
        self.set.domain_log2()
    }

    pub fn measure(&self) -> Result<DyadicScalar> {
        Ok(self.set.measure()? * self.set.measure()?)
    }

    pub fn contains_cell(&self, x: &BigUint, y: &BigUint) -> Result<bool> {
        Ok(self.set.contains_cell(x)? && self.set.contains_cell(y)?)
    }
}

/// Axis-parallel rectangle `[x, x + 2^w) × [y, y + 2^h)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRect {
    pub x_offset: DyadicScalar,
    pub y_offset: DyadicScalar,
    pub width_log2: i64,
    pub height_log2: i64,
}

impl DyadicRect {
    pub fn new(x_offset: DyadicScalar, y_offset: DyadicScalar, width_log2: i64, height_log2: i64) -> Self {
        DyadicRect { x_offset, y_offset, width_log2, height_log2 }
    }

    pub fn from_cells(x: &BigUint, y: &BigUint, width_log2: u32, height_log2: u32) -> Self {
        DyadicRect::new(
            DyadicScalar::from_biguint(x),
            DyadicScalar::from_biguint(y),
            width_log2 as i64,
            height_log2 as i64,
        )
    }

    pub fn area_log2(&self) -> i64 {
        self.width_log2 + self.height_log2
    }

    pub fn area(&self) -> DyadicScalar {
        DyadicScalar::pow2(self.area_log2())
    }

    pub fn x_interval(&self) -> DyadicInterval {
        DyadicInterval::new(self.x_offset.clone(), self.width_log2)
    }

    pub fn y_interval(&self) -> DyadicInterval {
        DyadicInterval::new(self.y_offset.clone(), self.height_log2)
    }

    pub fn translate(&self, dx: &DyadicScalar, dy: &DyadicScalar) -> DyadicRect {
        DyadicRect::new(&self.x_offset + dx, &self.y_offset + dy, self.width_log2, self.height_log2)
    }

    /// Area lies in `{2^{m_1}, ..., 2^{m_k}}`.
    pub fn is_admissible(&self, seq: &ExponentSequence) -> bool {
        seq.exponents().iter().any(|&m| m as i64 == self.area_log2())
    }
}

/// Average of `χ_{Q_k}` over the rectangle, as the product of the two 1D averages.
pub fn rect_average(crystal: &Crystal2D, rect: &DyadicRect) -> Result<DyadicScalar> {
    rect_average_of_product(crystal.x_set(), crystal.y_set(), rect)
}

/// Average of `χ_{A × B}` over the rectangle.
pub fn rect_average_of_product(a: &RareSet1D, b: &RareSet1D, rect: &DyadicRect) -> Result<DyadicScalar> {
    Ok(a.average_over(&rect.x_interval())? * b.average_over(&rect.y_interval())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[u32]) -> Crystal2D {
        Crystal2D::new(&ExponentSequence::new(v.to_vec()).unwrap(), Engine::Both).unwrap()
    }

    fn rect(x: u32, y: u32, w: u32, h: u32) -> DyadicRect {
        DyadicRect::from_cells(&x.into(), &y.into(), w, h)
    }

    #[test]
    fn average_examples() {
        let c = q(&[1, 2, 4, 8]);
        assert_eq!(rect_average(&c, &rect(0, 0, 1, 7)).unwrap(), DyadicScalar::pow2(-4));
        assert_eq!(rect_average(&c, &rect(0, 0, 8, 8)).unwrap(), DyadicScalar::pow2(-8));
        let c = q(&[1, 2, 4]);
        assert_eq!(rect_average(&c, &rect(4, 4, 0, 0)).unwrap(), DyadicScalar::one());
    }

    #[test]
    fn crystal_measure() {
        let c = q(&[1, 2, 4, 8]);
        assert_eq!(c.measure().unwrap(), DyadicScalar::pow2(16 - 8));
    }

    #[test]
    fn out_of_domain_rect() {
        let c = q(&[1, 2, 4]);
        assert!(rect_average(&c, &rect(12, 0, 3, 0)).is_err());
    }

    #[test]
    fn admissibility_by_area() {
        let s = ExponentSequence::new(vec![1, 2, 4, 8]).unwrap();
        assert!(rect(0, 0, 1, 7).is_admissible(&s));
        assert!(!rect(0, 0, 1, 6).is_admissible(&s));
    }
}
