//! Dense complex matrix kernel.

mod eigen;
mod matrix;
mod ops;
pub mod random;
pub mod span;

pub use eigen::{herm_eig, herm_eig_warm, pd_inv_sqrt, psd_sqrt, spectral_projection, HermEigen};
pub use matrix::{hs_inner, CMatrix, HermMatrix, C64, HERM_TOL, I, ONE, ZERO};
pub(crate) use matrix::{svec_into, svec_to_cmatrix};
pub use ops::{amplify, herm_norm, herm_pinv_solve, op_norm, psd_check, sym_pinv_solve, LevelCoeffs, PsdVerdict};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),
    #[error("matrix is not Hermitian (relative deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("numerical rank is ambiguous (relative singular value {ratio:e})")]
    RankAmbiguous { ratio: f64 },
}
