//! Polynomials, Laurent expansions, and branch-cut algebra over jets.

pub mod func;
pub mod laurent;
pub mod poly;
pub mod roots;

pub use func::{AlgebraicFn, BranchCut};
pub use laurent::LaurentSeries;
pub use poly::PolyZ;
pub use roots::{poly_roots_lifted, poly_roots_order0};
