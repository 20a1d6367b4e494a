//! Discretized continuous frames over metric measure spaces, p-weak localization
//! diagnostics, and the covering-based analysis of localized operators.
//!
//! Three concrete settings are supported: the Gabor (time-frequency) plane, the
//! affine group with the Haar wavelet, and the Bergman space of the unit disc.
//! Every quantity lives on a truncated, sampled copy of the index space; the
//! realization space of each frame is a finite-dimensional complex vector space.

extern crate blas_src;

pub mod diagnostics;
pub mod disc;
pub mod error;
pub mod experiments;
pub mod export;
pub mod frames;
pub mod geometry;
pub mod linalg;
pub mod localization;
pub mod operators;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
