//! Spectral Galerkin eigensolvers for the one-dimensional nonlocal (peridynamic)
//! operator
//!
//! ```text
//! L w(x) = ∫_{Ω ∩ B_δ(x)} C(x' - x) (w(x') - w(x)) dx'
//! ```
//!
//! Two discrete bases are provided: real Fourier modes on the periodic interval
//! `[0, 2π]` ([`fourier`]) and shifted Chebyshev polynomials on an arbitrary
//! interval ([`chebyshev`]). The exact Fourier multipliers of the kernel
//! ([`kernel`]) act as an independent oracle, [`analysis`] measures errors and
//! convergence rates, and [`dynamics`] uses the computed eigenpairs to evolve
//! `ρ u_tt = L u` by modal expansion.

pub mod analysis;
pub mod chebyshev;
pub mod cli;
pub mod dynamics;
pub mod eigsolver;
mod error;
pub mod fourier;
pub mod kernel;
pub mod problem;
pub mod quadrature;

pub use error::{Error, Result};
pub use kernel::{Micromodulus, MultiplierSample};
pub use problem::{Basis, BasisLabel, BoundaryCondition, SpectralProblem};
pub use quadrature::{Interval, Mesh, MeshKind};
