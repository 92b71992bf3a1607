//! Bifurcation analysis of polygonal relative equilibria.
//!
//! Three families share one machinery: point vortices and gravitating bodies
//! (a homogeneous attraction with exponent `alpha`, a central body of weight `mu`
//! and `n` unit bodies on a regular polygon), and rings of discrete nonlinear
//! Schrödinger oscillators rotating as a single wave of amplitude `mu`.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! * [`sums`]: the lattice sums `s_k`, their recurrence, and the block coefficients.
//! * [`system`]: system descriptions and planar configurations.
//! * [`potentials`]: potentials, gradients, analytic and finite-difference Hessians.
//! * [`symmetry`]: group actions, the symmetry-adapted basis, block extraction,
//!   fixed-point subspaces and configuration classification.
//! * [`bifurcation`]: sign indices, degree jumps and bifurcation values.
//! * [`continuation`]: branch switching and pseudo-arclength continuation.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bifurcation;
pub mod continuation;
mod error;
mod linalg;
pub mod potentials;
pub mod sums;
pub mod symmetry;
pub mod system;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use system::{Configuration, DnlsPotential, Family, OnSitePotential, SystemSpec};
