//! Multiplication operators on the Gaussian-weighted Fock space of entire functions.
//!
//! Coefficients are stored in the orthonormal monomial basis
//! `u_n = (r^n / n!)^{1/2} z^n`, so `‖Σ c_n u_n‖² = Σ |c_n|²`.

pub mod counterexamples;
pub mod error;
pub mod fock;
pub mod operators;
pub mod oracle;
pub mod special;
pub mod symbols;
pub mod verify;

pub use error::{FockError, Result};
pub use fock::{FockVector, GaussWeight};
pub use symbols::EntireSymbol;
