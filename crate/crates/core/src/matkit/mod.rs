//! Dense symmetric linear-algebra kernels.

pub mod cholesky;
pub mod eigen;
pub mod mat;
pub mod mil;

pub use cholesky::{chol_factor, chol_solve, pd_tolerance, quad_minimizer, spd_inverse, CholFactor};
pub use eigen::{lambda_extreme, sym_eigen, sym_eigenvalues, EigenPair};
pub use mat::{axpy, dot, norm, sub_vec, Mat};
pub use mil::{lu_inverse, mil_update, sym_mil_update};
