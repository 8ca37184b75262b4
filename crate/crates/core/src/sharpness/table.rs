use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ln1p, to_scientific, Enclosure};
use crate::basis3d::{theorem_certificate, BasisSpec, CertificateTheorem};
use crate::error::{Error, Result};
use crate::numerics::DyadicScalar;
use crate::options::CertifyOptions;

/// `φ(x) = x · ln(1 + x)^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhiSpec {
    pub p: u8,
}

impl PhiSpec {
    pub const MAX_P: u8 = 2;

    pub fn new(p: u8) -> Result<Self> {
        if p > Self::MAX_P {
            return Err(Error::out_of_range("phi exponent p", p as i64, 0, Self::MAX_P as i64));
        }
        Ok(PhiSpec { p })
    }

    pub fn all() -> Vec<PhiSpec> {
        (0..=Self::MAX_P).map(|p| PhiSpec { p }).collect()
    }
}

pub fn phi_eval(phi: PhiSpec, x: &Enclosure) -> Result<Enclosure> {
    if x.lo.is_negative() {
        return Err(Error::Domain(format!("phi of negative argument [{x}]")));
    }
    if phi.p == 0 {
        return Ok(x.clone());
    }
    Ok(x.mul(&ln1p(x)?.powi(phi.p as u32)))
}

/// `ρ(k, φ) = total / (φ(2^k) · μ₃(Z_k))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioRow {
    pub k: usize,
    pub alpha_log2: i64,
    pub p: u8,
    pub lower_bound: DyadicScalar,
    pub z_measure: DyadicScalar,
    pub denom: Enclosure,
    pub ratio: Enclosure,
    /// Present when `φ(2^k)` is dyadic, i.e. `p = 0`.
    pub exact_ratio: Option<DyadicScalar>,
}

pub const CSV_HEADER: &str = "k,alpha_log2,p,lower_bound_m,lower_bound_e,denom,ratio,ratio_err";

impl RatioRow {
    pub fn new(cert: &CertificateTheorem, phi: PhiSpec) -> Result<Self> {
        let k = cert.k;
        let inv_alpha = DyadicScalar::pow2(k as i64);
        let denom = phi_eval(phi, &Enclosure::exact(inv_alpha.clone()))?.mul_exact(&cert.z_measure);
        let ratio = Enclosure::exact(cert.total.clone()).div(&denom)?;
        let exact_ratio = (phi.p == 0).then(|| {
            let mu = cert.z_measure.log2_exact().expect("μ₃ is a power of two");
            cert.total.mul_pow2(-(k as i64) - mu)
        });
        if let Some(e) = &exact_ratio {
            if !ratio.contains(e) {
                return Err(Error::Invariant(format!("ratio enclosure [{ratio}] misses exact {e}")));
            }
        }
        Ok(RatioRow {
            k,
            alpha_log2: -(k as i64),
            p: phi.p,
            lower_bound: cert.total.clone(),
            z_measure: cert.z_measure.clone(),
            denom,
            ratio,
            exact_ratio,
        })
    }

    pub fn csv_record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k,
            self.alpha_log2,
            self.p,
            self.lower_bound.mantissa(),
            self.lower_bound.exponent(),
            to_scientific(&self.denom.mid(), 17),
            to_scientific(&self.ratio.mid(), 17),
            to_scientific(&self.ratio.radius(), 3),
        )
    }
}

pub fn rows_to_csv(rows: &[RatioRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_record());
        out.push('\n');
    }
    out
}

/// Rows for every `k` in the range and every `φ`, ordered by `(k, p)`.
pub fn rows_from_certificates(
    certs: &[CertificateTheorem],
    ks: RangeInclusive<usize>,
    phis: &[PhiSpec],
) -> Result<Vec<RatioRow>> {
    let mut phis = phis.to_vec();
    phis.sort();
    phis.dedup();
    let mut rows = Vec::new();
    for k in ks {
        let cert = certs.iter().find(|c| c.k == k).ok_or(Error::MissingCertificate(k))?;
        for &phi in &phis {
            rows.push(RatioRow::new(cert, phi)?);
        }
    }
    Ok(rows)
}

pub fn sharpness_table(
    basis: &BasisSpec,
    ks: RangeInclusive<usize>,
    phis: &[PhiSpec],
    opts: &CertifyOptions,
) -> Result<(Vec<CertificateTheorem>, Vec<RatioRow>)> {
    let certs = ks
        .clone()
        .into_par_iter()
        .map(|k| theorem_certificate(basis, k, opts))
        .collect::<Result<Vec<_>>>()?;
    let rows = rows_from_certificates(&certs, ks, phis)?;
    Ok((certs, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Bounded,
    Linear,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiTrend {
    pub p: u8,
    pub rows: usize,
    pub classification: Growth,
    pub max_ratio: f64,
    pub max_ratio_upper: DyadicScalar,
    /// `min_k ρ/k²`, exact; only for `p = 0`.
    pub k2_envelope: Option<DyadicScalar>,
    /// Every row has `ρ >= k²/32`.
    pub k2_envelope_ok: Option<bool>,
    /// `[min ρ/k, max ρ/k]`; only for `p = 1`.
    pub linear_bracket: Option<[f64; 2]>,
    /// `ρ/k ∈ [1/64, 1]` for every row, on the enclosure ends.
    pub linear_bracket_ok: Option<bool>,
    /// Every row has `ρ <= 0.15`; only for `p = 2`.
    pub bounded_ok: Option<bool>,
    /// Largest relative change between consecutive `k >= 8`; only for `p = 2`.
    pub stabilization: Option<f64>,
    pub stabilization_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub phis: Vec<PhiTrend>,
    pub note: String,
}

pub const TREND_NOTE: &str = "ratios are certified lower bounds for the crystal witness family; \
a bounded classification says nothing about the operator itself";

/// Growth class `d ∈ {0, 1, 2}` minimizing the spread `max/min` of `ρ/k^d`.
fn classify(points: &[(usize, f64)]) -> Growth {
    let spread = |d: i32| {
        let v: Vec<f64> = points.iter().map(|&(k, r)| r / (k as f64).powi(d)).collect();
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let best = (0..=2).min_by(|&a, &b| spread(a).total_cmp(&spread(b))).unwrap();
    [Growth::Bounded, Growth::Linear, Growth::Quadratic][best as usize]
}

pub fn trend_report(rows: &[RatioRow]) -> Result<TrendReport> {
    let mut ps: Vec<u8> = rows.iter().map(|r| r.p).collect();
    ps.sort();
    ps.dedup();
    let mut phis = Vec::new();
    for p in ps {
        let mut rs: Vec<&RatioRow> = rows.iter().filter(|r| r.p == p).collect();
        rs.sort_by_key(|r| r.k);
        if rs.len() < 3 {
            return Err(Error::InsufficientRows { p, need: 3, got: rs.len() });
        }
        let points: Vec<(usize, f64)> = rs.iter().map(|r| (r.k, r.ratio.to_f64())).collect();
        let max_ratio_upper = rs.iter().map(|r| r.ratio.hi.clone()).max().unwrap();
        let k = |r: &RatioRow| DyadicScalar::from_int(r.k as u64);

        let (mut k2_envelope, mut k2_envelope_ok) = (None, None);
        let (mut linear_bracket, mut linear_bracket_ok) = (None, None);
        let (mut bounded_ok, mut stabilization, mut stabilization_ok) = (None, None, None);
        match p {
            0 => {
                let exact: Option<Vec<(DyadicScalar, DyadicScalar)>> = rs
                    .iter()
                    .map(|r| r.exact_ratio.clone().map(|e| (e, k(r) * k(r))))
                    .collect();
                if let Some(exact) = exact {
                    // ρ/k² as exact ratios compared by cross-multiplication
                    let min = exact
                        .iter()
                        .min_by(|a, b| (&a.0 * &b.1).cmp(&(&b.0 * &a.1)))
                        .unwrap();
                    k2_envelope = Enclosure::exact(min.0.clone()).div(&Enclosure::exact(min.1.clone())).ok().map(|e| e.lo);
                    k2_envelope_ok = Some(exact.iter().all(|(rho, k2)| rho.mul_pow2(5) >= *k2));
                }
            }
            1 => {
                let v: Vec<f64> = points.iter().map(|&(k, r)| r / k as f64).collect();
                linear_bracket = Some([
                    v.iter().cloned().fold(f64::MAX, f64::min),
                    v.iter().cloned().fold(f64::MIN, f64::max),
                ]);
                linear_bracket_ok = Some(rs.iter().all(|r| r.ratio.lo.mul_pow2(6) >= k(r) && r.ratio.hi <= k(r)));
            }
            _ => {
                let hundred = DyadicScalar::from_int(100);
                bounded_ok = Some(rs.iter().all(|r| &r.ratio.hi * &hundred <= DyadicScalar::from_int(15)));
                let tail: Vec<f64> = points.iter().filter(|(k, _)| *k >= 8).map(|&(_, r)| r).collect();
                if tail.len() >= 2 {
                    let worst = tail.windows(2).map(|w| ((w[1] - w[0]) / w[0]).abs()).fold(0.0, f64::max);
                    stabilization = Some(worst);
                    stabilization_ok = Some(worst < 0.1);
                }
            }
        }
        phis.push(PhiTrend {
            p,
            rows: rs.len(),
            classification: classify(&points),
            max_ratio: max_ratio_upper.to_f64(),
            max_ratio_upper,
            k2_envelope,
            k2_envelope_ok,
            linear_bracket,
            linear_bracket_ok,
            bounded_ok,
            stabilization,
            stabilization_ok,
        });
    }
    Ok(TrendReport { phis, note: TREND_NOTE.to_string() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSReport {
    pub s: Vec<u32>,
    pub k_max: usize,
    pub sequence: Vec<u32>,
    pub rows: Vec<RatioRow>,
    /// `ρ(k_max, φ_0)`.
    pub capped_ratio: Enclosure,
    pub quadratic_growth_available: bool,
    pub note: String,
}

pub fn finite_s_report(s: &[u32], phis: &[PhiSpec], opts: &CertifyOptions) -> Result<FiniteSReport> {
    let basis = BasisSpec::finite(s.iter().copied())?;
    let k_max = basis.capacity().expect("finite");
    let (certs, rows) = sharpness_table(&basis, 1..=k_max, phis, opts)?;
    let top = certs.last().expect("k_max >= 1");
    let capped_ratio = RatioRow::new(top, PhiSpec { p: 0 })?.ratio;
    let BasisSpec::Finite(set) = &basis else { unreachable!() };
    Ok(FiniteSReport {
        s: set.iter().copied().collect(),
        k_max,
        sequence: top.sequence.clone(),
        rows,
        capped_ratio,
        quadratic_growth_available: false,
        note: format!(
            "S admits doubling chains of length at most {k_max}, so the witness ratio stays below \
             its value at k = {k_max} and no growth in k is available"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(ks: RangeInclusive<usize>) -> Vec<RatioRow> {
        let opts = CertifyOptions::default();
        sharpness_table(&BasisSpec::doubling(1).unwrap(), ks, &PhiSpec::all(), &opts).unwrap().1
    }

    #[test]
    fn phi_examples() {
        let x = Enclosure::exact(DyadicScalar::pow2(6));
        assert_eq!(phi_eval(PhiSpec::new(0).unwrap(), &x).unwrap(), x);
        let zero = Enclosure::exact(DyadicScalar::zero());
        assert_eq!(phi_eval(PhiSpec::new(2).unwrap(), &zero).unwrap(), zero);
        let ln2 = phi_eval(PhiSpec::new(1).unwrap(), &Enclosure::exact(DyadicScalar::one())).unwrap();
        assert!((ln2.to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(ln2.width() < DyadicScalar::pow2(-40));
        let neg = Enclosure::exact(DyadicScalar::from_int(-1));
        assert!(phi_eval(PhiSpec::new(1).unwrap(), &neg).is_err());
        assert!(PhiSpec::new(3).is_err());
    }

    #[test]
    fn k4_rows() {
        let rows = table(4..=4);
        assert_eq!(rows[0].exact_ratio, Some(DyadicScalar::one()));
        assert!(rows[0].ratio.is_exact());
        // 1 / ln²(17)
        let expect = 1.0 / 17f64.ln().powi(2);
        assert!((rows[2].ratio.to_f64() - expect).abs() < 1e-12);
        assert!(rows[2].ratio.width() <= rows[2].ratio.lo.mul_pow2(-30));
    }

    #[test]
    fn missing_certificate() {
        assert!(matches!(rows_from_certificates(&[], 3..=3, &PhiSpec::all()), Err(Error::MissingCertificate(3))));
    }

    #[test]
    fn trend_needs_three_rows() {
        let rows = table(4..=5);
        assert!(matches!(trend_report(&rows), Err(Error::InsufficientRows { p: 0, need: 3, got: 2 })));
    }

    #[test]
    fn finite_s_examples() {
        let opts = CertifyOptions::default();
        let r = finite_s_report(&[1, 2, 4], &[PhiSpec { p: 0 }], &opts).unwrap();
        assert_eq!(r.k_max, 3);
        assert_eq!(r.rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(finite_s_report(&[5], &[PhiSpec { p: 0 }], &opts).unwrap().k_max, 1);
        assert_eq!(finite_s_report(&[3, 4, 5], &[PhiSpec { p: 0 }], &opts).unwrap().k_max, 1);
        assert!(matches!(finite_s_report(&[], &[], &opts), Err(Error::EmptyBasis)));
    }

    #[test]
    fn csv_columns() {
        let rows = table(4..=4);
        let csv = rows_to_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.starts_with("4,-4,0,1,-12,"));
    }
}
