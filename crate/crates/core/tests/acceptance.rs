//! One test per acceptance criterion; each prints a single PASS/FAIL line.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crystalcert::basis3d::{copy_count, theorem_certificate, BasisSpec};
use crystalcert::crystal2d::{
    build_rect_family, lemma1_certificate, oracle_check, staircase, Crystal2D,
};
use crystalcert::numerics::DyadicScalar;
use crystalcert::rare_sets::{
    decompose_into_copies, family_levels, in_constraint_set_by_modulus, in_rare_set_by_rademacher,
    level_translates, long_intervals, Engine, ExponentSequence, RareSet1D,
};
use crystalcert::sharpness::{finite_s_report, sharpness_table, PhiSpec};
use crystalcert::{CertifyOptions, Error};

fn seq(v: &[u32]) -> ExponentSequence {
    ExponentSequence::new(v.to_vec()).unwrap()
}

fn pow2(n: i64) -> DyadicScalar {
    DyadicScalar::pow2(n)
}

fn big_pow2(n: u64) -> BigUint {
    BigUint::one() << n as usize
}

/// Print the verdict line, then fail the test if any check failed.
fn report(n: u32, title: &str, checks: &[(&str, bool)], elapsed: Duration) {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    let detail = if failed.is_empty() { String::new() } else { format!(" (failed: {})", failed.join("; ")) };
    println!("criterion {n:>2} {verdict}: {title} [{:.2?}]{detail}", elapsed);
    assert!(failed.is_empty(), "criterion {n} failed: {}", failed.join("; "));
}

/// Doubling sequences `m1, 2 m1, ...` of length `k <= 8` with `m_k <= 128`.
fn doubling_sequences() -> Vec<ExponentSequence> {
    let mut out = Vec::new();
    for k in 1..=8usize {
        let mut m1 = 1u32;
        while m1 << (k - 1) <= 128 {
            out.push(ExponentSequence::doubling(m1, k).unwrap());
            m1 += 1;
        }
    }
    out
}

#[test]
fn criterion_01_planar_certificate_k4() {
    let t = Instant::now();
    let c = lemma1_certificate(&seq(&[1, 2, 4, 8]), &CertifyOptions::default()).unwrap();
    let elapsed = t.elapsed();
    println!(
        "  union {} (16 rectangles of area 2^8), bound {}, raster {:?}",
        c.union_measure, c.bound, c.raster_measure
    );
    report(
        1,
        "planar certificate k=4, m=(1,2,4,8)",
        &[
            ("union measure exactly 2^11", c.union_measure == pow2(11)),
            ("bound (k/8) 2^(2m_k-k) = 2^11", c.bound == pow2(11)),
            ("pass", c.pass),
            ("pass with equality", c.union_measure == c.bound),
            ("rasterization of 16 rectangles matches", c.raster_measure.as_ref() == Some(&c.union_measure)),
            ("16 family rectangles", c.families.len() == 1 && c.families[0].count == "16"),
            ("runtime < 1 s", elapsed < Duration::from_secs(1)),
        ],
        elapsed,
    );
}

#[test]
fn criterion_02_oracle_inclusion() {
    let t = Instant::now();
    let mut checks = Vec::new();
    for v in [&[1u32, 2][..], &[1, 2, 4], &[1, 2, 4, 8]] {
        let r = oracle_check(&seq(v), &CertifyOptions::default()).unwrap();
        println!("  {v:?}: certificate {} oracle {}", r.certificate_measure, r.oracle_measure);
        checks.push((r.inclusion, r.oracle_measure >= r.certificate_measure));
    }
    let elapsed = t.elapsed();
    report(
        2,
        "certificate region inside brute-force superlevel set",
        &[
            ("set inclusion for every sequence", checks.iter().all(|c| c.0)),
            ("measure sandwich", checks.iter().all(|c| c.1)),
            ("runtime < 60 s", elapsed < Duration::from_secs(60)),
        ],
        elapsed,
    );
}

#[test]
fn criterion_03_counting_identities() {
    let t = Instant::now();
    let opts = CertifyOptions::with_engine(Engine::Symbolic);
    let (mut family, mut union, mut trans, mut long, mut copies) = (true, true, true, true, true);
    let mut n = 0;
    for s in doubling_sequences() {
        let k = s.k();
        let (mk, m) = (s.top() as u64, |i: usize| s.m(i) as u64);
        let crystal = Crystal2D::new(&s, Engine::Symbolic).unwrap();
        let set = crystal.x_set();
        for j in 1..=family_levels(k) {
            let f = build_rect_family(&crystal, j, &opts).unwrap();
            family &= f.count == big_pow2(2 * mk - m(k - j + 1) - k as u64);
            union &= f.union_measure == pow2(2 * mk as i64 - k as i64);
            trans &= level_translates(set, j).unwrap().count() == big_pow2(mk - m(j) + j as u64 - k as u64);
            long &= long_intervals(set, j).unwrap().count() == big_pow2(m(j) + mk - m(k - j + 1) - j as u64);
            n += 1;
        }
        for r in 1..=k {
            let c = copy_count(&s, r).unwrap();
            copies &= c == big_pow2(2 * (mk - m(r) - (k - r) as u64));
            copies &= decompose_into_copies(set, r).unwrap().count().pow(2) == c;
        }
    }
    let elapsed = t.elapsed();
    println!("  {} sequences, {n} families", doubling_sequences().len());
    report(
        3,
        "counting identities, symbolic engine, doubling k <= 8",
        &[
            ("family count", family),
            ("family union measure", union),
            ("translate count", trans),
            ("long-interval count", long),
            ("copy count", copies),
            ("runtime < 5 s", elapsed < Duration::from_secs(5)),
        ],
        elapsed,
    );
}

#[test]
fn criterion_04_overlap_law() {
    let t = Instant::now();
    let opts = CertifyOptions::with_engine(Engine::Symbolic);
    let (mut law, mut adjacent, mut pairs) = (true, true, 0);
    for s in doubling_sequences() {
        let k = s.k();
        let crystal = Crystal2D::new(&s, Engine::Symbolic).unwrap();
        let families: Vec<_> = (1..=family_levels(k)).map(|j| build_rect_family(&crystal, j, &opts).unwrap()).collect();
        let unit = pow2(2 * s.top() as i64 - k as i64);
        for o in staircase(&families).unwrap().overlaps {
            law &= o.measure == unit.mul_pow2(-((o.j2 - o.j) as i64));
            if o.j2 == o.j + 1 {
                adjacent &= o.ratio == pow2(-1);
            }
            pairs += 1;
        }
    }
    println!("  {pairs} family pairs");
    report(
        4,
        "overlap law 2^-|j-j'| 2^(2m_k-k), k <= 8",
        &[("every pair", law), ("adjacent ratio exactly 1/2", adjacent), ("some pairs built", pairs > 0)],
        t.elapsed(),
    );
}

#[test]
fn criterion_05_slab_certificate_k4() {
    let t = Instant::now();
    let c = theorem_certificate(&BasisSpec::doubling(1).unwrap(), 4, &CertifyOptions::default()).unwrap();
    let elapsed = t.elapsed();
    let closed: DyadicScalar = (1..=4u64).map(|r| DyadicScalar::from_int(r.div_ceil(4)).mul_pow2(10)).sum();
    let slab_ok = c.slabs.iter().all(|s| s.contribution >= DyadicScalar::from_int(s.r as u64).mul_pow2(12 - 4));
    report(
        5,
        "slab certificate k=4, m=(1,2,4,8)",
        &[
            ("total 4096", c.total == DyadicScalar::from_int(4096)),
            ("total = sum ceil(r/4) 2^10", c.total == closed),
            ("bound 2048", c.bound == DyadicScalar::from_int(2048)),
            ("pass", c.pass),
            ("each slab >= (r/16) 2^12", slab_ok),
            ("runtime < 1 s", elapsed < Duration::from_secs(1)),
        ],
        elapsed,
    );
}

#[test]
fn criterion_06_sharpness_table() {
    let t = Instant::now();
    let opts = CertifyOptions::with_engine(Engine::Symbolic);
    let (_, rows) = sharpness_table(&BasisSpec::doubling(1).unwrap(), 4..=12, &PhiSpec::all(), &opts).unwrap();
    let elapsed = t.elapsed();
    let k = |k: usize| DyadicScalar::from_int(k as u64);
    let p = |p: u8| rows.iter().filter(move |r| r.p == p);
    let quad = p(0).all(|r| r.exact_ratio.as_ref().is_some_and(|e| e.mul_pow2(5) >= k(r.k) * k(r.k)));
    let hundred = DyadicScalar::from_int(100);
    let bounded = p(2).all(|r| &r.ratio.hi * &hundred <= DyadicScalar::from_int(15));
    let width = p(2).all(|r| r.ratio.width() <= r.ratio.lo.mul_pow2(-30));
    let linear = p(1).all(|r| r.ratio.lo.mul_pow2(6) >= k(r.k) && r.ratio.hi <= k(r.k));
    for r in p(2) {
        println!("  k={:>2} rho(p=2) = {:.6}", r.k, r.ratio.to_f64());
    }
    report(
        6,
        "sharpness table, doubling m_1=1, k=4..12",
        &[
            ("rho(k,0) >= k^2/32 exactly", quad),
            ("rho(k,2) <= 0.15", bounded),
            ("rho(k,2) interval width <= 2^-30 rho", width),
            ("rho(k,1)/k in [1/64, 1]", linear),
            ("27 rows", rows.len() == 27),
            ("runtime < 10 s", elapsed < Duration::from_secs(10)),
        ],
        elapsed,
    );
}

#[test]
fn criterion_07_engine_agreement() {
    let t = Instant::now();
    let only = |e| CertifyOptions::with_engine(e);
    let mut same_lemma = true;
    let mut same_theorem = true;
    let mut both_ran = true;
    for v in [&[1u32, 2][..], &[1, 2, 4], &[1, 2, 4, 8], &[1, 2, 4, 8, 16], &[2, 4, 8], &[1, 3, 7, 14], &[3, 6, 12]] {
        let s = seq(v);
        let run = |e| lemma1_certificate(&s, &only(e));
        let (b, y) = (run(Engine::Bitset).unwrap(), run(Engine::Symbolic).unwrap());
        both_ran &= run(Engine::Both).is_ok();
        same_lemma &= b.union_measure == y.union_measure
            && b.families.iter().zip(&y.families).all(|(a, c)| a.count == c.count && a.union_measure == c.union_measure);
        if s.is_doubling() {
            let basis = BasisSpec::finite(v.iter().copied()).unwrap();
            let run = |e| theorem_certificate(&basis, v.len(), &only(e));
            let (b, y) = (run(Engine::Bitset).unwrap(), run(Engine::Symbolic).unwrap());
            both_ran &= run(Engine::Both).is_ok();
            same_theorem &= b.total == y.total && b.slabs.iter().zip(&y.slabs).all(|(a, c)| a.contribution == c.contribution);
        }
        let dense = RareSet1D::from_sequence(&s, Engine::Bitset).unwrap();
        let sym = RareSet1D::from_sequence(&s, Engine::Symbolic).unwrap();
        same_lemma &= dense.measure().unwrap() == sym.measure().unwrap();
    }
    let mismatch = Error::EngineDisagreement { quantity: "q".into(), bitset: "1".into(), symbolic: "2".into() };
    report(
        7,
        "bitset and symbolic engines agree for m_k <= 16",
        &[
            ("planar certificates agree", same_lemma),
            ("slab certificates agree", same_theorem),
            ("cross-checking runs succeed", both_ran),
            ("disagreement maps to exit 3", mismatch.exit_code() == 3),
        ],
        t.elapsed(),
    );
}

#[test]
fn criterion_08_membership_equivalence() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ok = true;
    let mut points = 0u64;
    let seqs = [&[1u32][..], &[1, 2], &[1, 2, 4], &[2, 4, 8], &[1, 2, 4, 8], &[1, 3, 7, 14], &[1, 2, 4, 8, 16]];
    for v in seqs {
        let s = seq(v);
        let d = s.top();
        let dense = RareSet1D::from_sequence(&s, Engine::Bitset).unwrap();
        let bits = dense.bitset().unwrap();
        for _ in 0..100_000 {
            let cell: u64 = rng.gen_range(0..1u64 << d);
            // an odd numerator keeps the point off every cell boundary
            let frac: u64 = rng.gen_range(0..1u64 << 20) | 1;
            let t = DyadicScalar::new((cell << 21) | frac, 21);
            let a = in_rare_set_by_rademacher(&t, &s);
            let b = in_constraint_set_by_modulus(&t, d, s.exponents());
            let c = bits.get(cell);
            ok &= a == b && b == c;
            points += 1;
        }
    }
    println!("  {points} points over {} sequences", seqs.len());
    report(8, "Rademacher, modulus and bitset membership agree", &[("all points agree", ok)], t.elapsed());
}

#[test]
fn criterion_09_finite_basis_cap() {
    let t = Instant::now();
    let opts = CertifyOptions::default();
    let err = theorem_certificate(&BasisSpec::finite([1, 2, 4]).unwrap(), 4, &opts).unwrap_err();
    let report_s = finite_s_report(&[1, 2, 4], &PhiSpec::all(), &opts).unwrap();
    let ks: Vec<usize> = report_s.rows.iter().map(|r| r.k).collect();
    let status = Command::new(env!("CARGO_BIN_EXE_crystalcert"))
        .args(["verify-theorem", "--finite-s", "1,2,4", "--k", "4"])
        .output()
        .unwrap();
    report(
        9,
        "finite S = {1,2,4} caps k at 3",
        &[
            ("capacity error for k=4", matches!(err, Error::Capacity { requested: 4, capacity: 3 })),
            ("k_max = 3", report_s.k_max == 3),
            ("rows capped at k=1..3", ks.iter().all(|k| (1..=3).contains(k)) && ks.contains(&3)),
            ("CLI exits 2", status.status.code() == Some(2)),
            ("no certificate on stdout", status.stdout.is_empty()),
        ],
        t.elapsed(),
    );
}

fn body_of(path: &Path) -> String {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    serde_json::to_string_pretty(&v["body"]).unwrap()
}

#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 3] = [
        &["verify-lemma1", "--sequence", "1,2,4,8"],
        &["verify-theorem", "--doubling", "--m1", "1", "--k", "4"],
        &["sharpness-table", "--doubling", "--m1", "1", "--kmax", "12", "--engine", "symbolic"],
    ];
    let mut identical = true;
    let mut exits = true;
    for (i, args) in commands.iter().enumerate() {
        let mut bodies = Vec::new();
        for (rep, par) in [(0, "1"), (1, "8"), (2, "1"), (3, "8")] {
            let out = dir.path().join(format!("c{i}-{rep}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_crystalcert"))
                .args(*args)
                .args(["--parallel", par, "--out", out.to_str().unwrap()])
                .status()
                .unwrap();
            exits &= status.code() == Some(0);
            bodies.push(body_of(&out));
        }
        identical &= bodies.windows(2).all(|w| w[0] == w[1]);
    }
    report(
        10,
        "byte-identical bodies across runs and --parallel 1/8",
        &[("bodies identical", identical), ("every run exits 0", exits)],
        t.elapsed(),
    );
}
