use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lift_rect, BasisSpec, Crystal3D};
use crate::crystal2d::{build_rect_family, lemma1_certificate, rect_average, Crystal2D};
use crate::error::{Error, Result};
use crate::numerics::{DyadicInterval, DyadicScalar};
use crate::options::CertifyOptions;
use crate::rare_sets::{decompose_into_copies, family_levels, ExponentSequence};

/// Number of copies of `Q_r` tiling `Q_k`: `2^{2(m_k - m_r - k + r)}`.
pub fn copy_count(seq: &ExponentSequence, r: usize) -> Result<BigUint> {
    let k = seq.k();
    if r == 0 || r > k {
        return Err(Error::out_of_range("copy scale r", r as i64, 1, k as i64));
    }
    let e = 2 * (seq.top() as u64 - seq.m(r) as u64 - (k - r) as u64);
    Ok(BigUint::one() << e as usize)
}

/// One z-layer `[2^{k-r-1}, 2^{k-r})` of the lower-bound region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlabRecord {
    pub r: usize,
    pub copies: String,
    /// Credited planar measure per copy: `(⌈r/4⌉/2) · 2^{2m_r - r}`.
    pub per_copy_measure: DyadicScalar,
    /// Exact union of the scale-`r` families inside one copy.
    pub per_copy_union: DyadicScalar,
    pub height_log2: i64,
    pub z_slab: DyadicInterval,
    pub contribution: DyadicScalar,
    /// `(r/16) · 2^{2m_k - k}`.
    pub slab_bound: DyadicScalar,
    pub contribution_ok: bool,
    pub lifts_checked: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateTheorem {
    pub sequence: Vec<u32>,
    pub k: usize,
    pub basis: BasisSpec,
    pub engine: crate::rare_sets::Engine,
    pub slabs: Vec<SlabRecord>,
    pub slabs_disjoint: bool,
    pub slab_bounds_ok: bool,
    pub total: DyadicScalar,
    /// `μ₃(Z_k) = 2^{2m_k - 2k}`.
    pub z_measure: DyadicScalar,
    #[serde(rename = "paper_bound")]
    pub bound: DyadicScalar,
    pub pass: bool,
}

/// `(1/32) · k² · 2^k · μ₃(Z_k)`.
pub fn theorem_bound(seq: &ExponentSequence) -> DyadicScalar {
    let k = seq.k() as u64;
    DyadicScalar::from_int(k * k).mul_pow2(2 * seq.top() as i64 - k as i64 - 5)
}

fn ceil_quarter(r: usize) -> u64 {
    r.div_ceil(4) as u64
}

/// Contribution of slab `r` on its own; see [`theorem_certificate`].
pub fn slab_contribution(seq: &ExponentSequence, r: usize, opts: &CertifyOptions) -> Result<SlabRecord> {
    let crystal = Crystal2D::new(seq, opts.engine_for(seq.top()))?;
    slab_record(&crystal, r, opts)
}

fn slab_record(crystal: &Crystal2D, r: usize, opts: &CertifyOptions) -> Result<SlabRecord> {
    let seq = crystal.sequence();
    let k = seq.k();
    let d = seq.top() as i64;
    let copies = copy_count(seq, r)?;
    let copy_x = decompose_into_copies(crystal.x_set(), r)?;
    if copy_x.count().pow(2) != copies {
        return Err(Error::Invariant(format!(
            "copy count {copies} is not the square of the 1D count {}",
            copy_x.count()
        )));
    }

    let prefix = seq.prefix(r)?;
    let mr = prefix.top() as i64;
    let per_copy_measure = DyadicScalar::from_int(ceil_quarter(r)).mul_pow2(2 * mr - r as i64 - 1);
    let local = lemma1_certificate(&prefix, opts)?;
    if local.union_measure < per_copy_measure {
        return Err(Error::Invariant(format!(
            "scale-{r} union {} is below the credited {}",
            local.union_measure, per_copy_measure
        )));
    }

    let height_log2 = (k - r) as i64 - 1;
    let contribution = DyadicScalar::from_biguint(&copies) * per_copy_measure.mul_pow2(height_log2);
    let slab_bound = DyadicScalar::from_int(r as u64).mul_pow2(2 * d - k as i64 - 4);
    let lifts_checked = check_lifts(crystal, &prefix, r, &copy_x, opts)?;
    Ok(SlabRecord {
        r,
        copies: copies.to_string(),
        per_copy_union: local.union_measure,
        per_copy_measure,
        height_log2,
        z_slab: DyadicInterval::new(DyadicScalar::pow2(height_log2), height_log2),
        contribution_ok: contribution >= slab_bound,
        contribution,
        slab_bound,
        lifts_checked,
    })
}

/// Place sampled scale-`r` family rectangles in sampled copies of `Q_r`,
/// lift them, and check each 3D average against `Z_k` directly.
fn check_lifts(
    crystal: &Crystal2D,
    prefix: &ExponentSequence,
    r: usize,
    copies: &crate::rare_sets::TranslateList,
    opts: &CertifyOptions,
) -> Result<u64> {
    let seq = crystal.sequence();
    let k = seq.k();
    let z = Crystal3D::new(crystal.clone());
    let local = Crystal2D::new(prefix, opts.engine_for(prefix.top()))?;
    let planar_target = DyadicScalar::pow2(-(r as i64));
    let target = DyadicScalar::pow2(-(k as i64));
    let mut rng = opts.rng(&[0x3d, k as u64, r as u64]);
    let levels = family_levels(r);
    let families = (1..=levels).map(|j| build_rect_family(&local, j, opts)).collect::<Result<Vec<_>>>()?;
    let n = opts.samples.max(1);
    for i in 0..n {
        let f = &families[i % levels];
        let dx = DyadicScalar::from_biguint(&copies.sample(&mut rng));
        let dy = DyadicScalar::from_biguint(&copies.sample(&mut rng));
        let rect = f.sample_member(&mut rng).translate(&dx, &dy);
        let planar = rect_average(crystal, &rect)?;
        let lift = lift_rect(&rect, &planar, r, k)?;
        let direct = z.cylinder_average(&lift.cylinder)?;
        if planar != planar_target || direct != lift.average || direct != target || !lift.cylinder.is_basis_admissible(seq)
        {
            return Err(Error::Invariant(format!(
                "lifted rectangle {rect:?} at scale {r}: planar {planar}, 3D {direct}"
            )));
        }
    }
    Ok(n as u64)
}

/// Slab-by-slab lower bound for the superlevel set of `χ_{Z_k}` at `2^{-k}`.
pub fn theorem_certificate(basis: &BasisSpec, k: usize, opts: &CertifyOptions) -> Result<CertificateTheorem> {
    let seq = basis.doubling_subsequence(k)?;
    let d = seq.top();
    let engine = opts.engine_for(d);
    let crystal = Crystal2D::new(&seq, engine)?;
    let slabs = (1..=k)
        .into_par_iter()
        .map(|r| slab_record(&crystal, r, opts))
        .collect::<Result<Vec<_>>>()?;

    let ceiling = DyadicScalar::pow2(k as i64 - 1);
    let slabs_disjoint = slabs.iter().all(|s| s.z_slab.right() <= ceiling && !s.z_slab.left.is_negative())
        && slabs
            .iter()
            .enumerate()
            .all(|(i, a)| slabs[i + 1..].iter().all(|b| !a.z_slab.overlaps(&b.z_slab)));
    if !slabs_disjoint {
        return Err(Error::Invariant("slabs overlap".into()));
    }

    let total: DyadicScalar = slabs.iter().map(|s| s.contribution.clone()).sum();
    let quarters: u64 = (1..=k).map(ceil_quarter).sum();
    let closed_form = DyadicScalar::from_int(quarters).mul_pow2(2 * d as i64 - k as i64 - 2);
    if total != closed_form {
        return Err(Error::Invariant(format!("slab total {total} differs from closed form {closed_form}")));
    }
    let z_measure = Crystal3D::new(crystal).measure()?;
    let bound = theorem_bound(&seq);
    debug_assert!(bound == DyadicScalar::from_int((k * k) as u64).mul_pow2(k as i64 - 5) * z_measure.clone());
    Ok(CertificateTheorem {
        sequence: seq.exponents().to_vec(),
        k,
        basis: basis.clone(),
        engine,
        slab_bounds_ok: slabs.iter().all(|s| s.contribution_ok),
        slabs,
        slabs_disjoint,
        pass: total >= bound,
        total,
        z_measure,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u32]) -> ExponentSequence {
        ExponentSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn copy_count_examples() {
        assert_eq!(copy_count(&seq(&[1, 2, 4, 8]), 4).unwrap(), BigUint::one());
        assert_eq!(copy_count(&seq(&[1, 2, 4, 8]), 1).unwrap(), BigUint::from(256u32));
        assert_eq!(copy_count(&seq(&[1, 2, 4]), 2).unwrap(), BigUint::from(4u32));
        assert!(copy_count(&seq(&[1, 2, 4]), 4).is_err());
    }

    #[test]
    fn slab_examples() {
        let opts = CertifyOptions::default();
        let s = slab_contribution(&seq(&[1, 2, 4, 8]), 1, &opts).unwrap();
        assert_eq!(s.copies, "256");
        assert_eq!(s.per_copy_measure, DyadicScalar::one());
        assert_eq!(s.contribution, DyadicScalar::from_int(1024));
        let s = slab_contribution(&seq(&[1, 2, 4, 8]), 4, &opts).unwrap();
        assert_eq!(s.height_log2, -1);
        assert_eq!(s.contribution, DyadicScalar::pow2(10));
        assert_eq!(s.slab_bound, DyadicScalar::pow2(10));
        assert!(s.contribution_ok);
    }

    #[test]
    fn theorem_k4() {
        let c = theorem_certificate(&BasisSpec::doubling(1).unwrap(), 4, &CertifyOptions::default()).unwrap();
        assert_eq!(c.total, DyadicScalar::from_int(4096));
        assert_eq!(c.bound, DyadicScalar::from_int(2048));
        assert_eq!(c.z_measure, DyadicScalar::pow2(8));
        assert!(c.pass && c.slab_bounds_ok && c.slabs_disjoint);
        assert!(c.slabs.iter().all(|s| s.contribution == DyadicScalar::pow2(10)));
    }

    #[test]
    fn theorem_k2() {
        let c = theorem_certificate(&BasisSpec::finite([1, 2]).unwrap(), 2, &CertifyOptions::default()).unwrap();
        // one copy per slab: 1·1·1 and 1·2·2^-1
        assert_eq!(c.total, DyadicScalar::from_int(2));
        assert_eq!(c.bound, DyadicScalar::pow2(-1));
        assert!(c.pass);
    }

    #[test]
    fn theorem_capacity() {
        let e = theorem_certificate(&BasisSpec::finite([1, 2, 4]).unwrap(), 4, &CertifyOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Capacity { .. }));
    }
}
