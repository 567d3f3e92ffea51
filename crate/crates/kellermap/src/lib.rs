//! Exact-arithmetic engine for polynomial map inversion analysis.
//!
//! The crate provides sparse multivariate polynomials over arbitrary-precision
//! rationals, polynomial maps with an iterated difference operator whose
//! vanishing certifies a polynomial inverse, exact rational linear algebra,
//! bases of map-invariant polynomials, a complete case analysis of cubic
//! Keller maps in dimensions 2 and 3, and a seeded search harness over such
//! maps.

pub mod rat;
pub mod poly;
pub mod parse;
pub mod linalg;
pub mod map;
pub mod invariants;
pub mod keller;
pub mod case22;
pub mod search;

pub use poly::{Monomial, PolyError, Polynomial, MAX_VARS};
pub use rat::Rational;
