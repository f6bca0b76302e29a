//! Numerical laboratory for quasi-stationary measures and quasi-ergodicity
//! of compact sub-Markov (Feynman–Kac) semigroups on finite state spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod montecarlo;
pub mod operators;
pub mod spectral;
pub mod statespace;

pub use error::{Error, Result};
