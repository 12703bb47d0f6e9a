//! Conic feasibility and norm minimization over Hermitian PSD cones, and
//! the complete-contractivity oracle built on them.

mod admm;
mod cbnorm;
mod opnorm;
mod program;

pub use admm::{solve, solve_feasibility, solve_monitored, DualWitness, SolveOptions, SolveOutcome, SolveStatus};
pub use cbnorm::{cb_norm_bound, cc_test, cc_test_seeded, sampled_cb_lower_bound, sampled_search as sampled_search_public, CcVerdict, LinearMapSpec, Violation};
pub use opnorm::{minimize_opnorm, minimize_opnorm_real, minimize_opnorm_with, OpnormMin};
pub use program::{AffineSet, ConicProgram};

use crate::matcore::MatError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("malformed program: {0}")]
    BadProgram(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}
