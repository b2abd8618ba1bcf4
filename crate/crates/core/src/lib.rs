//! Finite-element solvers for weighted Steklov and p-Steklov eigenproblems
//! on planar domains with an outward cusp.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod mesh;
pub mod numerics;
pub mod assembly;
pub mod linear_eigen;
pub mod p_solver;

pub use error::{Error, Result};
