pub mod basis3d;
pub mod cli;
pub mod crystal2d;
pub mod error;
pub mod numerics;
pub mod options;
pub mod rare_sets;
pub mod sharpness;

pub use error::{Error, Result};
pub use options::CertifyOptions;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/numbers.md")]
    mod numbers {}
    #[doc = include_str!("../../../book/src/rare-sets.md")]
    mod rare_sets {}
    #[doc = include_str!("../../../book/src/rectangles.md")]
    mod rectangles {}
    #[doc = include_str!("../../../book/src/cylinders.md")]
    mod cylinders {}
    #[doc = include_str!("../../../book/src/ratios.md")]
    mod ratios {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
