//! Dense linear algebra, seeded random streams and a symmetric eigensolver.

pub mod eigen;
pub mod ldlt;
pub mod matrix;
pub mod rng;
pub mod vector;

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use ldlt::{solve_symmetric, SymmetricFactorization};
pub use matrix::{gemm_acc, gemm_tn_acc, matmul, matvec, transpose_into, RealMatrix};
pub use rng::RngStream;
