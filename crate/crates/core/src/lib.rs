//! Discrete Gaussian free fields on random-conductance percolation clusters:
//! environments, killed Green kernels, field samplers, Wick calculus and the
//! convergence experiments built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod field;
pub mod green;
pub mod lattice;
pub mod numerics;
pub mod rng;
pub mod wick;

pub use error::{Error, Result};
