//! Analysis of permanental kernels: b-permanents and the Vere-Jones
//! positivity conditions, symmetrizability and inverse M-matrix
//! classification, dimension-reducing kernel transformations, and Monte
//! Carlo checks for the squared-Gaussian case.

pub mod classify;
pub mod cli;

pub mod error;
pub mod fixtures;
pub mod matcore;
pub mod mcverify;
pub mod permanent;
pub mod reduce;
mod serde_util;

pub use error::{Error, Result};
pub use matcore::{DiagonalScaling, Signature, SquareMatrix, Tolerance};
pub use permanent::{Exponent, Selection};
pub use serde_util::format_set;
