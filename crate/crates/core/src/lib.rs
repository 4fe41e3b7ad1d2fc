//! Sinh-Gordon form factors, multi-point correlators and numerical checks of their
//! Wightman properties.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axiom_suite;
pub mod cli;
pub mod config;
pub mod correlators;
pub mod error;
pub mod form_factors;
pub mod minkowski;
pub mod quadrature;
pub mod scattering;
pub mod special_fn;

pub use error::{Error, Result};
pub use num_complex::Complex64;
