//! Kernels, Fourier analysis and dispersion experiments for the Schrödinger flow on the Heisenberg group.

// Domain checks are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fourier;
pub mod group;
pub mod kernels;
pub mod lab;
pub mod quadrature;
pub mod solutions;
pub mod special;

pub use error::{Error, Result};
