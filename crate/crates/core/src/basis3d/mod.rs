//! The three-dimensional set `Z_k = Q_k × [0, 1]`, lifted boxes, and the
//! slab-by-slab lower bound.

mod basis;
mod certificate;
mod lift;

pub use basis::BasisSpec;
pub use certificate::{copy_count, slab_contribution, theorem_bound, theorem_certificate, CertificateTheorem, SlabRecord};
pub use lift::{lift_rect, Crystal3D, Cylinder, Lift};
