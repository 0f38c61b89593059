//! Genus expansion of one-cut polynomial random-matrix ensembles.
//!
//! The library computes the equilibrium measure of a perturbed Gaussian
//! ensemble, lifts it to truncated Taylor data in the coupling constants,
//! and runs the loop-equation recursion to produce the higher-genus
//! resolvent corrections and free-energy coefficients. Independent oracles
//! (map counting, orthogonal-polynomial densities, direct matrix-integral
//! quadrature) back every pinned numerical claim.

pub mod algebra;
pub mod equilibrium;
pub mod error;
pub mod hierarchy;
pub mod jet;
pub mod model;
pub mod oracles;
pub mod verify;

pub use error::{Error, Result};
