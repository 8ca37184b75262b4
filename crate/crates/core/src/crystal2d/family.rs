use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rect_average, Crystal2D, DyadicRect, Grid2D};
use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;
use crate::options::CertifyOptions;
use crate::rare_sets::{
    family_levels, level_translates, long_intervals, verify_translate_averages, AverageCheck, RareSet1D,
    TranslateList,
};

/// Checks run by [`build_rect_family`] before it returns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyVerification {
    pub x_averages: AverageCheck,
    pub y_averages: AverageCheck,
    pub sampled_members: u64,
    pub members_ok: bool,
    pub unions_ok: bool,
    pub disjoint: bool,
}

impl FamilyVerification {
    pub fn all_ok(&self) -> bool {
        self.x_averages.ok && self.y_averages.ok && self.members_ok && self.unions_ok && self.disjoint
    }
}

/// The level-`j` family: rectangles `[a, a + 2^{m_j}) × [b, b + 2^{m_{k-j+1} - m_j})`
/// with `a` ranging over the level translates and `b` over the long
/// intervals. Every member has area `2^{m_{k-j+1}}` and `χ_{Q_k}`-average
/// exactly `2^{-k}`.
#[derive(Clone, Debug)]
pub struct RectFamily {
    pub j: usize,
    pub k: usize,
    pub x_translates: TranslateList,
    pub y_intervals: TranslateList,
    pub x_union: RareSet1D,
    pub y_union: RareSet1D,
    pub rect_width_log2: u32,
    pub rect_height_log2: u32,
    pub count: BigUint,
    pub union_measure: DyadicScalar,
    pub verification: FamilyVerification,
}

impl RectFamily {
    pub fn area_log2(&self) -> u32 {
        self.rect_width_log2 + self.rect_height_log2
    }

    pub fn member(&self, ix: &BigUint, iy: &BigUint) -> Option<DyadicRect> {
        let x = self.x_translates.get(ix)?;
        let y = self.y_intervals.get(iy)?;
        Some(DyadicRect::from_cells(&x, &y, self.rect_width_log2, self.rect_height_log2))
    }

    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R) -> DyadicRect {
        let x = self.x_translates.sample(rng);
        let y = self.y_intervals.sample(rng);
        DyadicRect::from_cells(&x, &y, self.rect_width_log2, self.rect_height_log2)
    }

    /// Every member, if there are at most `cap`.
    pub fn members(&self, cap: u64) -> Option<Vec<DyadicRect>> {
        if self.count > BigUint::from(cap) {
            return None;
        }
        let xs = self.x_translates.offsets()?;
        let ys = self.y_intervals.offsets()?;
        Some(
            ys.iter()
                .flat_map(|y| {
                    xs.iter().map(move |x| {
                        DyadicRect::from_cells(x, y, self.rect_width_log2, self.rect_height_log2)
                    })
                })
                .collect(),
        )
    }
}

/// Build and verify the level-`j` family of the crystal.
pub fn build_rect_family(crystal: &Crystal2D, j: usize, opts: &CertifyOptions) -> Result<RectFamily> {
    let seq = crystal.sequence();
    let k = seq.k();
    let jmax = family_levels(k);
    if j == 0 || j > jmax {
        return Err(Error::out_of_range("family level j", j as i64, 1, jmax as i64));
    }
    let set = crystal.x_set();
    let d = seq.top();
    let engine = crystal.engine();
    let mut rng = opts.rng(&[0xfa, k as u64, j as u64]);

    let x_translates = level_translates(set, j)?;
    let y_intervals = long_intervals(set, j)?;
    let x_scales: Vec<u32> = seq.exponents()[j..].to_vec();
    let y_scales: Vec<u32> = seq.exponents()[k - j..].to_vec();
    let x_union = RareSet1D::constraint(d, &x_scales, engine)?;
    let y_union = RareSet1D::constraint(d, &y_scales, engine)?;

    let x_averages = verify_translate_averages(
        set,
        &x_translates,
        &DyadicScalar::pow2(-(j as i64)),
        opts.samples,
        &mut rng,
    )?;
    let y_averages = verify_translate_averages(
        set,
        &y_intervals,
        &DyadicScalar::pow2(j as i64 - k as i64),
        opts.samples,
        &mut rng,
    )?;
    let unions_ok = union_matches(&x_translates, &x_union)? && union_matches(&y_intervals, &y_union)?;

    let rect_width_log2 = seq.m(j);
    let rect_height_log2 = y_intervals.block_length_log2();
    let target = DyadicScalar::pow2(-(k as i64));
    let mut members_ok = true;
    for _ in 0..opts.samples {
        let x = x_translates.sample(&mut rng);
        let y = y_intervals.sample(&mut rng);
        let r = DyadicRect::from_cells(&x, &y, rect_width_log2, rect_height_log2);
        members_ok &= rect_average(crystal, &r)? == target;
    }
    let disjoint = x_translates.is_pairwise_disjoint(opts.samples, &mut rng)
        && y_intervals.is_pairwise_disjoint(opts.samples, &mut rng);

    let verification = FamilyVerification {
        x_averages,
        y_averages,
        sampled_members: opts.samples as u64,
        members_ok,
        unions_ok,
        disjoint,
    };
    let count = x_translates.count() * y_intervals.count();
    let union_measure = x_union.measure()? * y_union.measure()?;
    let family = RectFamily {
        j,
        k,
        x_translates,
        y_intervals,
        x_union,
        y_union,
        rect_width_log2,
        rect_height_log2,
        count,
        union_measure,
        verification,
    };
    if !family.verification.all_ok() {
        return Err(Error::Invariant(format!(
            "level-{j} family failed verification: {:?}",
            family.verification
        )));
    }
    Ok(family)
}

/// The union of the translates equals the claimed constraint set.
fn union_matches(list: &TranslateList, claimed: &RareSet1D) -> Result<bool> {
    if let Some(scales) = list.union_scales() {
        return Ok(scales == claimed.scales());
    }
    // explicit list from the dense engine: rasterize and compare
    let bits = claimed
        .bitset()
        .ok_or_else(|| Error::Invariant("explicit translate list without a dense set".into()))?;
    let mut painted = crate::rare_sets::CellBitset::new(list.domain_log2());
    let w = 1u64 << list.block_length_log2();
    for o in list.offsets().unwrap_or_default() {
        let o = o.to_u64().unwrap();
        for c in o..o + w {
            painted.set(c);
        }
    }
    Ok(&painted == bits)
}

/// x-translates pairwise disjoint and y-intervals pairwise disjoint, which
/// makes the product family pairwise disjoint.
pub fn verify_pairwise_disjoint<R: Rng + ?Sized>(family: &RectFamily, sample: usize, rng: &mut R) -> bool {
    family.x_translates.is_pairwise_disjoint(sample, rng) && family.y_intervals.is_pairwise_disjoint(sample, rng)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub j: usize,
    pub j2: usize,
    pub measure: DyadicScalar,
    /// `measure / mu(U_j)`.
    pub ratio: DyadicScalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Staircase {
    pub union_measure: DyadicScalar,
    pub overlaps: Vec<Overlap>,
}

/// Measure of `⋃_j (X_j × Y_j)` for families with `X_1 ⊆ X_2 ⊆ ...` and
/// `Y_1 ⊇ Y_2 ⊇ ...`: a point first enters the x-chain at `j` and is then
/// covered iff its y-coordinate lies in `Y_j`.
pub fn staircase(families: &[RectFamily]) -> Result<Staircase> {
    for w in families.windows(2) {
        if !w[0].x_union.is_subset_of(&w[1].x_union)? || !w[1].y_union.is_subset_of(&w[0].y_union)? {
            return Err(Error::Invariant(format!(
                "families {} and {} are not nested",
                w[0].j, w[1].j
            )));
        }
    }
    let mut union_measure = DyadicScalar::zero();
    let mut prev_x = DyadicScalar::zero();
    for f in families {
        let mx = f.x_union.measure()?;
        union_measure = union_measure + (&mx - &prev_x) * f.y_union.measure()?;
        prev_x = mx;
    }
    let mut overlaps = Vec::new();
    for (a, fa) in families.iter().enumerate() {
        for fb in &families[a + 1..] {
            let measure = fa.x_union.intersect(&fb.x_union)?.measure()? * fa.y_union.intersect(&fb.y_union)?.measure()?;
            let ratio = exact_ratio(&measure, &fa.union_measure)?;
            overlaps.push(Overlap { j: fa.j, j2: fb.j, measure, ratio });
        }
    }
    Ok(Staircase { union_measure, overlaps })
}

/// Build families `1..=levels` and measure their union.
pub fn union_measure_staircase(crystal: &Crystal2D, levels: usize, opts: &CertifyOptions) -> Result<Staircase> {
    let jmax = family_levels(crystal.sequence().k());
    if levels > jmax {
        return Err(Error::out_of_range("J", levels as i64, 0, jmax as i64));
    }
    let families = (1..=levels).map(|j| build_rect_family(crystal, j, opts)).collect::<Result<Vec<_>>>()?;
    staircase(&families)
}

/// `a / b` when `b` is a power of two times an odd number dividing `a`.
fn exact_ratio(a: &DyadicScalar, b: &DyadicScalar) -> Result<DyadicScalar> {
    use num_integer::Integer;
    use num_traits::Zero;
    if b.is_zero() {
        return Err(Error::Invariant("ratio by zero".into()));
    }
    let (q, r) = a.mantissa().div_rem(b.mantissa());
    if !r.is_zero() {
        return Err(Error::Invariant(format!("{a} / {b} is not dyadic")));
    }
    Ok(DyadicScalar::new(q, a.exponent() - b.exponent()))
}

/// Paint every member of every family; `None` if any family is too large.
pub fn rasterize_families(families: &[RectFamily], side_log2: u32) -> Result<Option<Grid2D>> {
    let mut grid = Grid2D::new(side_log2)?;
    for f in families {
        let Some(members) = f.members(1 << 22) else { return Ok(None) };
        for r in &members {
            grid.fill(r)?;
        }
    }
    Ok(Some(grid))
}
