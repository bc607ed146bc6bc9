//! Scaling partitions of unity `sum_j g(M^j x) = 1` for expanding matrices, the
//! partition-preserving integral transform, the geometric-knot spline family
//! `h_n`, and frequency-domain dual wavelet frame pairs built from them.
//!
//! Everything is evaluated numerically but exactly where the mathematics allows
//! it: dilation sums over `j` in `Z` are reduced to finite sums whenever the
//! summand has annular support, and the splines are stored as piecewise
//! polynomials.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dilation;
pub mod error;
pub mod field;
pub mod frames;
pub mod grid;
pub mod matrix;
pub mod pou;
pub mod quadrature;
pub mod report;
pub mod spline;
pub mod transform;

pub use error::{Error, Result};
pub use field::{RadialProfile, ScalarField, Support};
pub use matrix::{ExpansionCertificate, Norm, PowerBounds, SquareMatrix};
pub use pou::{PartitionSystem, TruncationPolicy};
pub use report::VerificationReport;
pub use spline::PiecewiseEvenSpline;
