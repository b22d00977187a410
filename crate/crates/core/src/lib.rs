//! Biarchetype analysis on dense real matrices.
//!
//! A data matrix `X` (n observations by m features) is approximated as
//! `alpha * Z * gamma`, where the biarchetype matrix `Z = beta * X * theta`
//! is built from convex mixtures of rows (`beta`) and columns (`theta`) of
//! the data, and every observation and feature is in turn a convex mixture
//! of biarchetypes (`alpha`, `gamma`). Fitting alternates simplex-constrained
//! least-squares solves for each factor.
//!
//! Also included are classical archetype analysis (the column side frozen
//! at the identity), the closed-form grand-mean model, a hard double
//! k-means baseline, an RSS elbow surface for choosing `(k, c)`, and
//! fixture generators.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! drivers and the command-line front-end live in the `biarch` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data_gen;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod selection;
pub mod simplex_ls;
pub mod solvers;
pub mod types;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use types::{
    validate_stochastic, Axis, BiaaModel, DataMatrix, FitConfig, RssSurface, StochasticMatrix,
};
