//! Fast marching for constant anisotropic metrics on lattice-reduced stencils.
//!
//! [`lattice`] finds a Minkowski-reduced basis, [`mesh`] turns it into an M-reduced
//! stencil, [`solver`] runs fast marching and Gauss-Seidel on it and checks the error
//! bounds, and [`experiments`] drives the tables and statistics behind the CLI.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod lattice;
pub mod mesh;
pub mod solver;
pub mod metric;

pub use error::{Error, Result};
