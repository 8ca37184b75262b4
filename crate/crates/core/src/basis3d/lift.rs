use serde::{Deserialize, Serialize};

use crate::crystal2d::{rect_average, Crystal2D, DyadicRect};
use crate::error::{Error, Result};
use crate::numerics::{DyadicInterval, DyadicScalar};
use crate::rare_sets::ExponentSequence;

/// `Z_k = Q_k × [0, 1]`.
#[derive(Clone, Debug)]
pub struct Crystal3D {
    pub base: Crystal2D,
}

impl Crystal3D {
    pub fn new(base: Crystal2D) -> Self {
        Crystal3D { base }
    }

    pub fn measure(&self) -> Result<DyadicScalar> {
        self.base.measure()
    }

    /// Average of `χ_{Z_k}` over the cylinder: the planar average times the
    /// fraction of the z-interval inside `[0, 1]`.
    pub fn cylinder_average(&self, cyl: &Cylinder) -> Result<DyadicScalar> {
        let planar = rect_average(&self.base, &cyl.base)?;
        let zero = DyadicScalar::zero();
        let one = DyadicScalar::one();
        let lo = cyl.z.left.clone().max(zero.clone());
        let hi = cyl.z.right().min(one);
        let inside = if hi > lo { &hi - &lo } else { zero };
        Ok(planar * inside.mul_pow2(-cyl.z.length_log2))
    }
}

/// A box `R × z` with `z` a dyadic interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub base: DyadicRect,
    pub z: DyadicInterval,
}

impl Cylinder {
    pub fn height_log2(&self) -> i64 {
        self.z.length_log2
    }

    /// Base area is some `2^{m_i}`; the height is free.
    pub fn is_basis_admissible(&self, seq: &ExponentSequence) -> bool {
        self.base.is_admissible(seq)
    }
}

/// A lifted rectangle together with its 3D average and the counted top half.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lift {
    pub cylinder: Cylinder,
    pub average: DyadicScalar,
    pub top_half: DyadicInterval,
}

/// Lift `rect` (planar average `planar_avg >= 2^{-r}`) to `rect × [0, 2^{k-r})`.
/// The 3D average against `Z_k` is `planar_avg · 2^{r-k}`, at least `2^{-k}`.
pub fn lift_rect(rect: &DyadicRect, planar_avg: &DyadicScalar, r: usize, k: usize) -> Result<Lift> {
    if r == 0 || r > k {
        return Err(Error::out_of_range("slab scale r", r as i64, 1, k as i64));
    }
    if planar_avg < &DyadicScalar::pow2(-(r as i64)) {
        return Err(Error::Domain(format!("planar average {planar_avg} is below 2^-{r}")));
    }
    let h = (k - r) as i64;
    let cylinder = Cylinder { base: rect.clone(), z: DyadicInterval::new(DyadicScalar::zero(), h) };
    Ok(Lift {
        cylinder,
        average: planar_avg.mul_pow2(r as i64 - k as i64),
        top_half: DyadicInterval::new(DyadicScalar::pow2(h - 1), h - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rare_sets::Engine;

    fn z(v: &[u32]) -> Crystal3D {
        Crystal3D::new(Crystal2D::new(&ExponentSequence::new(v.to_vec()).unwrap(), Engine::Both).unwrap())
    }

    #[test]
    fn lift_examples() {
        let rect = DyadicRect::from_cells(&0u8.into(), &0u8.into(), 1, 1);
        let l = lift_rect(&rect, &DyadicScalar::pow2(-4), 4, 4).unwrap();
        assert_eq!(l.cylinder.height_log2(), 0);
        assert_eq!(l.average, DyadicScalar::pow2(-4));

        let l = lift_rect(&rect, &DyadicScalar::pow2(-1), 1, 4).unwrap();
        assert_eq!(l.cylinder.z.length(), DyadicScalar::from_int(8));
        assert_eq!(l.average, DyadicScalar::pow2(-4));
        assert_eq!(l.top_half, DyadicInterval::new(DyadicScalar::from_int(4), 2));

        assert!(lift_rect(&rect, &DyadicScalar::pow2(-3), 2, 5).is_err());
        assert!(lift_rect(&rect, &DyadicScalar::one(), 0, 5).is_err());
    }

    #[test]
    fn lift_average_matches_direct_integral() {
        // [0,2)×[0,2) meets Z(1,2) in one of its four cells
        let zk = z(&[1, 2]);
        let rect = DyadicRect::from_cells(&0u8.into(), &0u8.into(), 1, 1);
        let planar = rect_average(&zk.base, &rect).unwrap();
        assert_eq!(planar, DyadicScalar::pow2(-2));
        let l = lift_rect(&rect, &planar, 2, 2).unwrap();
        assert_eq!(zk.cylinder_average(&l.cylinder).unwrap(), l.average);

        let zk = z(&[1, 2, 4, 8, 16]);
        let rect = DyadicRect::from_cells(&0u8.into(), &0u8.into(), 1, 1);
        let planar = rect_average(&zk.base, &rect).unwrap();
        assert_eq!(planar, DyadicScalar::pow2(-2));
        let l = lift_rect(&rect, &planar, 2, 5).unwrap();
        assert_eq!(l.average, DyadicScalar::pow2(-5));
        assert_eq!(zk.cylinder_average(&l.cylinder).unwrap(), l.average);
    }

    #[test]
    fn partial_height_overlap() {
        let zk = z(&[1, 2]);
        let rect = DyadicRect::from_cells(&0u8.into(), &0u8.into(), 1, 1);
        let cyl = Cylinder { base: rect, z: DyadicInterval::new(DyadicScalar::pow2(-1), 0) };
        assert_eq!(zk.cylinder_average(&cyl).unwrap(), DyadicScalar::pow2(-3));
    }
}
