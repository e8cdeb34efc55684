//! Numerical toolkit for norms and metrics on spaces of (possibly nonlinear)
//! operators, extension of subadditive functionals, and distributions.

// `!(x > 0.0)` is used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod contraction;
pub mod distrib;
pub mod expr;
pub mod extension;
pub mod fourier;
pub mod metricmaps;
pub mod opspace;
pub mod quadrature;
pub mod spaces;
pub mod suite;
pub mod testfn;
pub mod tolerance;
