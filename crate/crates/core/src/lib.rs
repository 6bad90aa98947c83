//! Nodal length of Gaussian random spherical harmonics restricted to
//! spherical caps: field sampling, nodal-line extraction, Wiener-chaos
//! statistics, Kac-Rice theory and a Monte Carlo harness.

// `!(x > a)` rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod error;
pub mod field;
pub mod legendre;
pub mod mc;
pub mod nodal;
pub mod quad;
pub mod theory;
pub mod validation;
