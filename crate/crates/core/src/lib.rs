//! Fractional (tempered) posterior laboratory.
//!
//! Exact and sampled alpha-posteriors for three models: the Gaussian white
//! noise sequence model with Gaussian series priors, density estimation with
//! Dirichlet random histogram priors, and density estimation with
//! exponentiated Gaussian-process priors. The [`experiments`] module binds
//! them into reproducible Monte Carlo studies.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bases;
pub mod divergences;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod gwn;
pub mod hist;
pub mod numerics;
pub mod supnorm;

pub use error::{Error, Result};
