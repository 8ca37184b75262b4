use num_traits::ToPrimitive;

use serde::{Deserialize, Serialize};

use super::{build_rect_family, lemma1_certificate, rasterize_families, Crystal2D, Grid2D, RASTER_MAX_LOG2};
use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;
use crate::options::CertifyOptions;
use crate::rare_sets::{family_levels, Engine, ExponentSequence, RareSet1D};

/// Union of every unit-aligned rectangle `2^a × 2^{m_i - a}` whose average of
/// `χ_{Q_k}` is at least `level`.
///
/// The crystal is rebuilt from Rademacher signs on a dense 2D grid and the
/// averages come from 2D prefix sums, so nothing here relies on the product
/// structure or on the translate families.
pub fn brute_force_superlevel(crystal: &Crystal2D, level: &DyadicScalar) -> Result<Grid2D> {
    let seq = crystal.sequence();
    let d = seq.top();
    if d > RASTER_MAX_LOG2 {
        return Err(Error::SizeCap(format!(
            "brute-force superlevel needs m_k <= {RASTER_MAX_LOG2}, got {d}"
        )));
    }
    if level.is_negative() {
        return Err(Error::Domain(format!("negative level {level}")));
    }
    let y = RareSet1D::from_sequence(seq, Engine::Bitset)?;
    let bits = y.bitset().expect("bitset engine");
    let n = 1usize << d;
    let stride = n + 1;

    // prefix[(y)·stride + x] = #cells of Q in [0, x) × [0, y)
    let mut prefix = vec![0u32; stride * stride];
    for yy in 0..n {
        let mut row = 0u32;
        let in_y = bits.get(yy as u64);
        for xx in 0..n {
            row += (in_y && bits.get(xx as u64)) as u32;
            prefix[(yy + 1) * stride + xx + 1] = prefix[yy * stride + xx + 1] + row;
        }
    }
    let block = |x: usize, y: usize, w: usize, h: usize| {
        prefix[(y + h) * stride + x + w] + prefix[y * stride + x]
            - prefix[y * stride + x + w]
            - prefix[(y + h) * stride + x]
    };

    let mut diff = vec![0i32; stride * stride];
    for &m in seq.exponents() {
        let need = (level.mul_pow2(m as i64)).ceil().to_u64().unwrap_or(u64::MAX);
        for a in 0..=m {
            let (wl, hl) = (a, m - a);
            if wl > d || hl > d {
                continue;
            }
            let (w, h) = (1usize << wl, 1usize << hl);
            for yy in 0..=n - h {
                for xx in 0..=n - w {
                    if block(xx, yy, w, h) as u64 >= need {
                        diff[yy * stride + xx] += 1;
                        diff[yy * stride + xx + w] -= 1;
                        diff[(yy + h) * stride + xx] -= 1;
                        diff[(yy + h) * stride + xx + w] += 1;
                    }
                }
            }
        }
    }

    // 2D prefix sum of the difference array, in place, gives coverage counts
    let mut grid = Grid2D::new(d)?;
    for yy in 0..n {
        for xx in 0..n {
            let i = yy * stride + xx;
            let up = if yy > 0 { diff[i - stride] } else { 0 };
            let left = if xx > 0 { diff[i - 1] } else { 0 };
            let corner = if yy > 0 && xx > 0 { diff[i - stride - 1] } else { 0 };
            diff[i] += up + left - corner;
            if diff[i] > 0 {
                grid.set(xx as u64, yy as u64);
            }
        }
    }
    Ok(grid)
}

/// Certificate region against the brute-force superlevel set at `2^{-k}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub sequence: Vec<u32>,
    pub level: DyadicScalar,
    pub certificate_measure: DyadicScalar,
    pub oracle_measure: DyadicScalar,
    /// Every painted family cell lies in the oracle region.
    pub inclusion: bool,
    pub pass: bool,
}

pub fn oracle_check(seq: &ExponentSequence, opts: &CertifyOptions) -> Result<OracleReport> {
    let d = seq.top();
    if d > RASTER_MAX_LOG2 {
        return Err(Error::SizeCap(format!("oracle check needs m_k <= {RASTER_MAX_LOG2}, got {d}")));
    }
    let cert = lemma1_certificate(seq, opts)?;
    let crystal = Crystal2D::new(seq, opts.engine_for(d))?;
    let families = (1..=family_levels(seq.k()))
        .map(|j| build_rect_family(&crystal, j, opts))
        .collect::<Result<Vec<_>>>()?;
    let painted = rasterize_families(&families, d)?
        .ok_or_else(|| Error::SizeCap("family too large to paint".into()))?;
    let level = DyadicScalar::pow2(-(seq.k() as i64));
    let oracle = brute_force_superlevel(&crystal, &level)?;
    let inclusion = painted.is_subset_of(&oracle);
    Ok(OracleReport {
        sequence: seq.exponents().to_vec(),
        pass: inclusion && oracle.measure() >= cert.union_measure,
        level,
        certificate_measure: cert.union_measure,
        oracle_measure: oracle.measure(),
        inclusion,
    })
}
