//! Independent cross-checks: combinatorial map counting, finite-size
//! orthogonal-polynomial ensembles, direct matrix-integral quadrature, and
//! contour integration. Nothing here shares code paths with the hierarchy
//! it validates.

pub mod contour;
pub mod maps;
pub mod orthopoly;
pub mod quadrature;
pub mod ward;
