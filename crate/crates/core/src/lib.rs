//! Verification engine for the multisymplectic Einstein–Hilbert and
//! Einstein–Palatini models.

// tensor code reads best with explicit index loops
#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod eh;
pub mod ep;
pub mod error;
pub mod exterior;
pub mod fieldspace;
pub mod geometry;
pub mod report;
pub mod scalar;
pub mod taylor;

pub use error::{Error, Result};
pub use scalar::{Dual, Scalar};
pub use taylor::{JetScalar, MultiIndex};
