use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rasterize_families, staircase, build_rect_family, Crystal2D, FamilyVerification, Overlap, Region2D, RASTER_MAX_LOG2};
use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;
use crate::options::CertifyOptions;
use crate::rare_sets::{family_levels, Engine, ExponentSequence};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub j: usize,
    /// Decimal string; counts overflow every native width quickly.
    pub count: String,
    pub x_translates: String,
    pub y_intervals: String,
    pub rect_width_log2: u32,
    pub rect_height_log2: u32,
    pub area_log2: u32,
    pub union_measure: DyadicScalar,
    pub verification: FamilyVerification,
}

/// Exact lower bound for the level-`2^{-k}` superlevel set of the strong
/// maximal function of `χ_{Q_k}` restricted to areas `2^{m_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateLemma1 {
    pub sequence: Vec<u32>,
    pub k: usize,
    #[serde(rename = "J")]
    pub levels: usize,
    pub engine: Engine,
    pub families: Vec<FamilyRecord>,
    pub overlaps: Vec<Overlap>,
    /// Every overlap equals `2^{-|j-j'|} · 2^{2m_k-k}`.
    pub overlap_law: bool,
    pub union_measure: DyadicScalar,
    pub inclusion_exclusion_measure: DyadicScalar,
    /// Painted-cell count of every family member, when `m_k` is small enough.
    pub raster_measure: Option<DyadicScalar>,
    /// `J · 2^{2m_k-k-1}`: what the half-filling count alone guarantees.
    pub half_filling_credit: DyadicScalar,
    #[serde(rename = "paper_bound")]
    pub bound: DyadicScalar,
    pub pass: bool,
}

/// `(k/8) · 2^{2m_k-k}`.
pub fn lemma1_bound(seq: &ExponentSequence) -> DyadicScalar {
    let k = seq.k() as i64;
    DyadicScalar::from_int(k).mul_pow2(2 * seq.top() as i64 - k - 3)
}

pub fn lemma1_certificate(seq: &ExponentSequence, opts: &CertifyOptions) -> Result<CertificateLemma1> {
    let k = seq.k();
    let d = seq.top();
    let levels = family_levels(k);
    for j in 1..=levels {
        if !seq.level_admissible(j) {
            return Err(Error::InvalidSequence(format!("level {j} is not admissible for {:?}", seq.exponents())));
        }
    }
    let engine = opts.engine_for(d);
    let crystal = Crystal2D::new(seq, engine)?;
    let families = (1..=levels)
        .into_par_iter()
        .map(|j| build_rect_family(&crystal, j, opts))
        .collect::<Result<Vec<_>>>()?;

    let stairs = staircase(&families)?;
    let unit = DyadicScalar::pow2(2 * d as i64 - k as i64);
    let overlap_law = stairs
        .overlaps
        .iter()
        .all(|o| o.measure == unit.mul_pow2(o.j as i64 - o.j2 as i64));
    if !overlap_law {
        return Err(Error::Invariant(format!("overlap law fails for {:?}", seq.exponents())));
    }

    let mut region = Region2D::new(d);
    for f in &families {
        region.push(f.x_union.clone(), f.y_union.clone())?;
    }
    let inclusion_exclusion_measure = region.measure()?;
    if inclusion_exclusion_measure != stairs.union_measure {
        return Err(Error::Invariant(format!(
            "staircase union {} differs from inclusion-exclusion {}",
            stairs.union_measure, inclusion_exclusion_measure
        )));
    }
    let raster_measure = if d <= RASTER_MAX_LOG2 {
        rasterize_families(&families, d)?.map(|g| g.measure())
    } else {
        None
    };
    if let Some(r) = &raster_measure {
        if r != &stairs.union_measure {
            return Err(Error::EngineDisagreement {
                quantity: "family union measure".into(),
                bitset: r.to_string(),
                symbolic: stairs.union_measure.to_string(),
            });
        }
    }

    let bound = lemma1_bound(seq);
    let records = families
        .iter()
        .map(|f| FamilyRecord {
            j: f.j,
            count: f.count.to_string(),
            x_translates: f.x_translates.count().to_string(),
            y_intervals: f.y_intervals.count().to_string(),
            rect_width_log2: f.rect_width_log2,
            rect_height_log2: f.rect_height_log2,
            area_log2: f.area_log2(),
            union_measure: f.union_measure.clone(),
            verification: f.verification.clone(),
        })
        .collect();
    Ok(CertificateLemma1 {
        sequence: seq.exponents().to_vec(),
        k,
        levels,
        engine,
        families: records,
        overlaps: stairs.overlaps,
        overlap_law,
        pass: stairs.union_measure >= bound,
        union_measure: stairs.union_measure,
        inclusion_exclusion_measure,
        raster_measure,
        half_filling_credit: DyadicScalar::from_int(levels as u64).mul_pow2(2 * d as i64 - k as i64 - 1),
        bound,
    })
}
