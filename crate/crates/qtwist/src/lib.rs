//! Trigonometric and elliptic (eight-vertex) R-matrices of quantum affine
//! sl(2) in the fundamental evaluation representation.
//!
//! The crate builds the standard R-matrix two ways (recursion and closed
//! form), the Hopf and quasi-Hopf twistors that deform it into Baxter's
//! eight-vertex R-matrix, and the classical and quantum
//! Knizhnik-Zamolodchikov systems for two- and three-point functions.
//! Every construction comes with the identity that validates it; see
//! [`suite`] for the full list.

pub mod config;
pub mod evrep;
pub mod fps;
pub mod linalg;
pub mod qkz;
pub mod qspecial;
pub mod rmatrix;
pub mod suite;
pub mod twistor;
pub mod words;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for all numeric (non-series) operators.
pub type CMat = nalgebra::DMatrix<C64>;

/// Shorthand for a real-valued complex number.
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}
