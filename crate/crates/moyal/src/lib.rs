//! Phase-space quantum mechanics on a discretized 1-D system.
//!
//! This crate implements the Moyal formulation of quantum mechanics on a
//! finite lattice — Wigner functions, Weyl quantization, the Stratonovich
//! quantizer family and its algebra, the star product, Heisenberg-picture
//! quantum trajectories — and uses them to compute a quantum Lyapunov
//! exponent next to its classical counterpart, plus the tomographic (Radon)
//! representation of states.
//!
//! Start with [`lattice::Lattice`], which fixes the discretization and the
//! Fourier conventions, then build states ([`states`]), move between
//! operators and symbols ([`weyl`]), evolve ([`dynamics`], [`classical`]),
//! estimate exponents ([`lyapunov`]) and project tomograms ([`tomography`]).
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! blocks are compiled and executed by `cargo test --doc`.

pub mod classical;
pub mod dynamics;
pub mod error;
mod fft;
pub mod io;
pub mod lattice;
pub mod lyapunov;
pub mod potential;
pub mod states;
pub mod tomography;
pub mod trajectory;
pub mod weyl;

pub use error::{Error, Result};
pub use lattice::Lattice;
pub use states::{OperatorMatrix, PhaseSpaceDisplacement, WaveFunction};
pub use trajectory::{Provenance, Trajectory};
pub use weyl::PhaseSpaceFunction;

// Compile and run the book's code listings as doctests.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(lattice, "../../../book/src/lattice.md");
    chapter!(states, "../../../book/src/states.md");
    chapter!(weyl, "../../../book/src/weyl-calculus.md");
    chapter!(star_product, "../../../book/src/star-product.md");
    chapter!(dynamics, "../../../book/src/dynamics.md");
    chapter!(classical, "../../../book/src/classical.md");
    chapter!(lyapunov, "../../../book/src/lyapunov.md");
    chapter!(tomography, "../../../book/src/tomography.md");
    chapter!(cli, "../../../book/src/cli.md");
    chapter!(conventions, "../../../book/src/conventions.md");
}
