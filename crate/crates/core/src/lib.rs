//! Numerical toolkit for classical and quantum statistical experiments on
//! finite-dimensional algebras, with a verifier for local asymptotic
//! normality of i.i.d. quantum models.

pub mod ccr;
pub mod classical;
pub mod convergence;
pub mod error;
pub mod family;
pub mod hermlin;
pub mod lan;
pub mod quantum;

pub use error::{Error, Result};
pub use hermlin::{CMatrix, DensityMatrix, SpectralDecomposition, C64};
