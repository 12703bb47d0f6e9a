//! Selfadjoint matrix spaces, their generated *-algebras and TROs, and
//! cone-spanning detection.

mod closure;
mod cone;
mod space;

pub use closure::{generate_star_algebra, generate_tro, tro_equals_algebra, unit_projection, AlgebraPresentation};
pub use cone::{cone_spans, ConeSpan};
pub use space::{validate_space, ConeMode, MatrixSpace, SpaceReport};

use thiserror::Error;

use crate::conesolver::ConeError;
use crate::matcore::MatError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StarError {
    #[error("no generators given")]
    NoGenerators,
    #[error("all generators vanish numerically")]
    ZeroSpace,
    #[error("unit projection is not in the algebra (residual {residual:e})")]
    UnitNotInAlgebra { residual: f64 },
    #[error("inconclusive at tolerance: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

pub(crate) use space::herm_span;
