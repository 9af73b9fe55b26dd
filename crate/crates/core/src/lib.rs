//! The discrete q-deformed quantum harmonic oscillator.
//!
//! The crate builds the truncated Fock-space operators `Q`, `P`, `H`, the
//! discrete q-Hermite wavefunctions on the lattice `{±qˢ}`, and the evolution
//! kernel that acts as a fractional Fourier transform on that lattice.

pub mod error;
pub mod qcore;
pub mod qhermite;
pub mod fock;
pub mod hilbert;
pub mod evolution;
pub mod export;

pub use error::{Error, Result};
pub use qcore::DeformationContext;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/deformation.md")]
    mod deformation {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/fock.md")]
    mod fock {}
    #[doc = include_str!("../../../book/src/realizations.md")]
    mod realizations {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
