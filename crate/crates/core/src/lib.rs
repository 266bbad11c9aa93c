//! Numerical laboratory for weighted composition operators `C_{ψ,φ} f = ψ·(f∘φ)`
//! acting on the weighted Dirichlet spaces `D_α` of the unit disc.
//!
//! The crate realizes the operators as finite matrices in the orthonormal
//! monomial basis, evaluates boundedness/compactness criterion quantities on
//! annular grids, and compares truncated-matrix eigenvalues against the
//! fixed-point spectrum `{ψ(a)·φ'(a)^n} ∪ {0}`.
//!
//! Module map:
//! - [`series`]: truncated Taylor series and DFT coefficient extraction.
//! - [`catalog`]: closed-form inducing functions with order-2 jets.
//! - [`space`]: norms, kernels and quadrature for `D_α` / `A²_α`.
//! - [`operator`]: matrix assembly, application and the adjoint-kernel check.
//! - [`criteria`]: criterion quantities on annular grids and verdicts.
//! - [`spectral`]: spectrum prediction, dense eigenvalues and matching.
//! - [`report`]: command drivers shared by the `wco` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod criteria;
mod error;
pub mod json;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod series;
pub mod space;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Machine epsilon for `f64`.
pub(crate) const EPS: f64 = f64::EPSILON;
