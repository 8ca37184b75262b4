//! The planar crystal `Q_k = Y_k × Y_k`, its rectangle families, and the
//! superlevel-set certificate built from them.

mod certificate;
mod family;
mod oracle;
mod rect;
mod region;

pub use certificate::{lemma1_bound, lemma1_certificate, CertificateLemma1, FamilyRecord};
pub use family::{
    build_rect_family, rasterize_families, staircase, union_measure_staircase, verify_pairwise_disjoint,
    FamilyVerification, Overlap, RectFamily, Staircase,
};
pub use oracle::{brute_force_superlevel, oracle_check, OracleReport};
pub use rect::{rect_average, rect_average_of_product, Crystal2D, DyadicRect};
pub use region::{Grid2D, Region2D, RASTER_MAX_LOG2};
