//! Linear-algebra kernels: sparse symmetric storage, envelope Cholesky,
//! conjugate gradients and dense symmetric eigensolvers.

mod cg;
mod cholesky;
mod dd;
mod dense;
mod sparse;

pub use cg::{cg_solve, CgResult};
pub use cholesky::{chol_factor, chol_factor_with, chol_solve, rcm_ordering, CholeskyFactor};
pub use dd::{dd_dot, dd_vec, f64_vec, Dd, DdCholesky, DdDense, DdDenseCholesky, DdSparse};
pub use dense::{
    dense_cholesky, generalized_sym_eigen, jacobi_sym_eigen, jacobi_sym_eigen_capped, DenseCholesky,
    DenseSym, SymEigen, DEFAULT_DENSE_CAP,
};
pub use sparse::{dot, norm2, norm_inf, SparseSym, TripletBuilder};
