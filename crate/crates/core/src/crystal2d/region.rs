use num_traits::ToPrimitive;

use super::DyadicRect;
use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;
use crate::rare_sets::{CellBitset, RareSet1D};

/// Largest side (log2) that 2D rasterization will allocate.
pub const RASTER_MAX_LOG2: u32 = 12;

/// Finite union of products `A_i × B_i` of constraint sets.
#[derive(Clone, Debug)]
pub struct Region2D {
    domain_log2: u32,
    products: Vec<(RareSet1D, RareSet1D)>,
}

impl Region2D {
    pub fn new(domain_log2: u32) -> Self {
        Region2D { domain_log2, products: Vec::new() }
    }

    pub fn push(&mut self, a: RareSet1D, b: RareSet1D) -> Result<()> {
        if a.domain_log2() != self.domain_log2 || b.domain_log2() != self.domain_log2 {
            return Err(Error::Domain("product factor on a different domain".into()));
        }
        self.products.push((a, b));
        Ok(())
    }

    pub fn products(&self) -> &[(RareSet1D, RareSet1D)] {
        &self.products
    }

    pub fn domain_log2(&self) -> u32 {
        self.domain_log2
    }

    /// Exact measure by inclusion–exclusion over all sub-collections.
    pub fn measure(&self) -> Result<DyadicScalar> {
        let n = self.products.len();
        if n > 16 {
            return Err(Error::SizeCap(format!("inclusion-exclusion over {n} products")));
        }
        let mut total = DyadicScalar::zero();
        for mask in 1u32..(1 << n) {
            let mut picked = (0..n).filter(|i| mask >> i & 1 == 1);
            let first = picked.next().unwrap();
            let (mut a, mut b) = self.products[first].clone();
            for i in picked {
                a = a.intersect(&self.products[i].0)?;
                b = b.intersect(&self.products[i].1)?;
            }
            let term = a.measure()? * b.measure()?;
            if mask.count_ones() % 2 == 1 {
                total = total + term;
            } else {
                total = total - term;
            }
        }
        Ok(total)
    }

    pub fn rasterize(&self) -> Result<Grid2D> {
        let mut grid = Grid2D::new(self.domain_log2)?;
        for (a, b) in &self.products {
            let a = dense(a)?;
            let b = dense(b)?;
            let xs: Vec<u64> = a.ones().collect();
            for y in b.ones() {
                for &x in &xs {
                    grid.set(x, y);
                }
            }
        }
        Ok(grid)
    }
}

fn dense(set: &RareSet1D) -> Result<CellBitset> {
    match set.bitset() {
        Some(b) => Ok(b.clone()),
        None => Ok(set.with_engine(crate::rare_sets::Engine::Bitset)?.bitset().unwrap().clone()),
    }
}

/// Dense raster of a subset of `[0, 2^side_log2)²`; cell `(x, y)` is bit `y·2^side + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid2D {
    side_log2: u32,
    bits: CellBitset,
}

impl Grid2D {
    pub fn new(side_log2: u32) -> Result<Self> {
        if side_log2 > RASTER_MAX_LOG2 {
            return Err(Error::SizeCap(format!(
                "2D raster needs m_k <= {RASTER_MAX_LOG2}, got {side_log2}"
            )));
        }
        Ok(Grid2D { side_log2, bits: CellBitset::new(2 * side_log2) })
    }

    pub fn side_log2(&self) -> u32 {
        self.side_log2
    }

    pub fn set(&mut self, x: u64, y: u64) {
        self.bits.set(y << self.side_log2 | x);
    }

    pub fn get(&self, x: u64, y: u64) -> bool {
        self.bits.get(y << self.side_log2 | x)
    }

    pub fn count(&self) -> u64 {
        self.bits.count()
    }

    pub fn measure(&self) -> DyadicScalar {
        DyadicScalar::from_int(self.count())
    }

    pub fn is_subset_of(&self, other: &Grid2D) -> bool {
        self.bits.is_subset_of(&other.bits)
    }

    /// Paint an integer-aligned rectangle.
    pub fn fill(&mut self, rect: &DyadicRect) -> Result<()> {
        let coords = || -> Option<(u64, u64, u64, u64)> {
            let x = rect.x_offset.to_integer()?.to_u64()?;
            let y = rect.y_offset.to_integer()?.to_u64()?;
            let w = 1u64.checked_shl(rect.width_log2.try_into().ok()?)?;
            let h = 1u64.checked_shl(rect.height_log2.try_into().ok()?)?;
            Some((x, y, w, h))
        };
        let (x, y, w, h) = coords().ok_or_else(|| Error::Domain(format!("rectangle {rect:?} is off the unit grid")))?;
        let n = 1u64 << self.side_log2;
        if x + w > n || y + h > n {
            return Err(Error::Domain(format!("rectangle {rect:?} leaves the domain")));
        }
        for yy in y..y + h {
            for xx in x..x + w {
                self.set(xx, yy);
            }
        }
        Ok(())
    }
}
