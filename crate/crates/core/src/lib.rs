//! Popular differences for matrix patterns over finite fields.
//!
//! Exact finite-field linear algebra, constraint subspaces of four-point
//! matrix patterns, quadratic factors on `(F_p^n)^k`, Gowers norms and
//! exhaustive equidistribution checks, the F_5 counterexample pipeline, and
//! Bohr-set machinery for three-point patterns in finite abelian groups.

pub mod analysis;
pub mod counterexample;
pub mod error;
pub mod ffalg;
pub mod gridfn;
pub mod guard;
pub mod patterns;
pub mod threept;

pub use error::{Error, Result};
pub use guard::Guard;
