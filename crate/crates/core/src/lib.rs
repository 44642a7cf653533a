//! Continuous infinitary logic over finite metric structure codes.

pub mod formula;
pub mod gen;
pub mod io;
pub mod rational;
pub mod scott;
pub mod structure;
pub mod synthesis;
pub mod vaught;

pub use rational::{q, Rational};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/formulas.md")]
    mod formulas {}
    #[doc = include_str!("../../../book/src/vaught.md")]
    mod vaught {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/ranks.md")]
    mod ranks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
