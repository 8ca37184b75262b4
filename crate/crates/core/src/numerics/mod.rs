//! Exact dyadic arithmetic.
//!
//! Every measure, average, and bound produced by the certificates is a
//! [`DyadicScalar`]. No floating point enters a certified path.

mod dyadic;
mod interval;

pub use dyadic::DyadicScalar;
pub use interval::DyadicInterval;
