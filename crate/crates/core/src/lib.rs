//! Exact computations with bi-ordered free groups and the groups built from them.
//!
//! * [`words`]: reduced words, products, shortlex balls.
//! * [`magnus`]: the Magnus-expansion bi-ordering of `F_k`.
//! * [`stallings`]: folded core graphs of finitely generated subgroups.
//! * [`cones`]: finite-ball validators and combinators for (relative) cones.
//! * [`hgp`]: the central extension `B_f`, the semidirect product `H(F,P)`,
//!   quotients `H/A_S` and their bi-order.
//! * [`lift`]: order-preserving automorphisms and their lifts to `H(F,P)`.
//! * [`reduction`]: the map from subgroups to marked groups `N_G`, with
//!   preimage analysis, isomorphism and injectivity witnesses, and demos.
//! * [`suites`]: the property suites behind `selftest` and the acceptance tests.

pub mod cones;
pub mod hgp;
pub mod json;
pub mod lift;
pub mod magnus;
pub mod mutation;
pub mod reduction;
pub mod sample;
pub mod stallings;
pub mod suites;
pub mod words;

pub use magnus::Sign;
pub use stallings::StallingsGraph;
pub use words::{Letter, Word, WordError};
