// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod extremal;
pub mod functionals;
pub mod green;
pub mod interp;
pub mod profile;
pub mod quad;
pub mod rearrange;
pub mod transplant;

pub use error::{Error, Result};
pub use profile::{Potential, PotentialTable, RadialProfile};
pub use quad::{integrate, make_constants, make_grid, truncated_exp, Constants, Dimension, Grading, RadialGrid};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/functionals.md")]
    mod functionals {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/transplant.md")]
    mod transplant {}
    #[doc = include_str!("../../../book/src/rearrangement.md")]
    mod rearrangement {}
    #[doc = include_str!("../../../book/src/extremal.md")]
    mod extremal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
