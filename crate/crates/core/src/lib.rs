//! Log-spectral density estimation by sinusoidal multitapering followed by
//! data-adaptive, variable-halfwidth kernel smoothing, with optimal
//! one-sided kernels at declared discontinuities and band edges.

// NaN must fail range checks, so they are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bench;
pub mod boundary;
pub mod error;
pub mod kernel;
pub mod legendre;
pub mod moments;
pub mod pipeline;
pub mod smooth;
pub mod special;
pub mod synth;
pub mod taper;

pub use error::{Error, Result};
