// `!(a <= b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod curve;
pub mod error;
pub mod export;
pub mod integrator;
pub mod mesh;
pub mod ode;
pub mod plot;
pub mod series;
pub mod shooting;
pub mod verify;

pub use error::{Error, Result};

/// The guide under `book/` is compiled here so its examples run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/profile-equation.md")]
    mod profile_equation {}
    #[doc = include_str!("../../../book/src/series-seed.md")]
    mod series_seed {}
    #[doc = include_str!("../../../book/src/integrator.md")]
    mod integrator {}
    #[doc = include_str!("../../../book/src/shooting.md")]
    mod shooting {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli-and-formats.md")]
    mod cli_and_formats {}
}
