//! Numerical toolkit for the two-copy distillability problem of Werner
//! states: the hermitian biquadratic form Φ, its matrix `H(X, Y)`, the
//! diagonal-case block structure, the determinant `D(X, Y) = det H(X, Y)`
//! and seeded counterexample searches.

pub mod biquadratic;
pub mod detpoly;
pub mod diagonal;
pub mod error;
pub mod hmatrix;
pub mod json;
pub mod linalg;
pub mod sampling;
pub mod search;
pub mod werner;

pub use error::{Error, Result};
