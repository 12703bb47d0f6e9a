use crate::matcore::span::{coords, extend_span, orthonormalize, RankOptions};
use crate::matcore::{hs_inner, CMatrix, HermMatrix, MatError, C64, ZERO};

use super::StarError;

/// Cones carried by a space; only the cones inherited from the ambient
/// matrix algebra are supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ConeMode {
    Inherited,
}

/// A selfadjoint subspace `X ⊂ M_n` with a Hilbert–Schmidt orthonormal
/// basis of Hermitian matrices (orthonormal over `C` as well).
#[derive(Clone, Debug)]
pub struct MatrixSpace {
    n: usize,
    basis: Vec<HermMatrix>,
    pub cone_mode: ConeMode,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SpaceReport {
    pub dim: usize,
    /// The generators were not closed under adjoints.
    pub adjoints_added: bool,
}

/// Hermitian and anti-Hermitian parts `(m + m*)/2`, `(m − m*)/2i`.
pub(crate) fn herm_parts(m: &CMatrix) -> [HermMatrix; 2] {
    [
        HermMatrix::from_hermitian_part(m),
        HermMatrix::from_hermitian_part(&m.skew_hermitian_part()),
    ]
}

/// Orthonormal Hermitian basis of the real span of `cands`.
pub(crate) fn herm_span(cands: &[HermMatrix], opts: RankOptions) -> Result<Vec<HermMatrix>, MatError> {
    let n = cands.first().map(|c| c.dim()).unwrap_or(0);
    let v = orthonormalize(cands.iter().map(|c| c.to_svec()).collect(), opts)?;
    Ok(v.iter().map(|x| HermMatrix::from_svec(n, x)).collect())
}

pub fn validate_space(generators: &[CMatrix]) -> Result<(MatrixSpace, SpaceReport), StarError> {
    let first = generators.first().ok_or(StarError::NoGenerators)?;
    let n = first.rows();
    for g in generators {
        if g.shape() != (n, n) {
            return Err(MatError::ShapeMismatch {
                expected: (n, n),
                found: g.shape(),
            }
            .into());
        }
        if !g.is_finite() {
            return Err(MatError::NonFinite.into());
        }
    }
    if generators.iter().all(|g| g.max_abs() == 0.0) {
        return Err(StarError::ZeroSpace);
    }
    let cands: Vec<HermMatrix> = generators.iter().flat_map(herm_parts).collect();
    let basis = herm_span(&cands, RankOptions::default())?;
    if basis.is_empty() {
        return Err(StarError::ZeroSpace);
    }
    // Complex dimension of the span of the generators alone.
    let re: Vec<Vec<f64>> = generators
        .iter()
        .flat_map(|g| [g.to_real_vec(), g.scale(crate::matcore::I).to_real_vec()])
        .collect();
    let gen_dim = orthonormalize(re, RankOptions::lenient(1e-8))?.len() / 2;
    let report = SpaceReport {
        dim: basis.len(),
        adjoints_added: basis.len() > gen_dim,
    };
    Ok((
        MatrixSpace {
            n,
            basis,
            cone_mode: ConeMode::Inherited,
        },
        report,
    ))
}

impl MatrixSpace {
    /// Wraps an already orthonormal Hermitian basis.
    pub(crate) fn from_orthonormal(n: usize, basis: Vec<HermMatrix>) -> Self {
        Self {
            n,
            basis,
            cone_mode: ConeMode::Inherited,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[HermMatrix] {
        &self.basis
    }

    pub fn basis_matrices(&self) -> Vec<CMatrix> {
        self.basis.iter().map(|b| b.as_cmatrix().clone()).collect()
    }

    /// `Σ c_t b_t`.
    pub fn element(&self, c: &[C64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (b, &ct) in self.basis.iter().zip(c) {
            if ct != ZERO {
                m.axpy(ct, b.as_cmatrix());
            }
        }
        m
    }

    /// Hermitian element `Σ c_t b_t` for real coefficients.
    pub fn real_element(&self, c: &[f64]) -> HermMatrix {
        let cc: Vec<C64> = c.iter().map(|&v| C64::new(v, 0.0)).collect();
        HermMatrix::from_hermitian_part(&self.element(&cc))
    }

    /// Orthogonal-projection coordinates and the relative residual.
    pub fn coords(&self, x: &CMatrix) -> (Vec<C64>, f64) {
        let c: Vec<C64> = self.basis.iter().map(|b| hs_inner(x, b.as_cmatrix()).expect("shape")).collect();
        let r = x - &self.element(&c);
        let scale = x.fro_norm().max(1e-300);
        (c, r.fro_norm() / scale)
    }

    /// `‖x − P_X x‖_F` (absolute).
    pub fn residual(&self, x: &CMatrix) -> f64 {
        let (c, _) = self.coords(x);
        (x - &self.element(&c)).fro_norm()
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let g = hs_inner(a.as_cmatrix(), b.as_cmatrix()).expect("shape");
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `V* X V` for an isometry or projection-like `v`, re-orthonormalized.
    pub fn compressed(&self, v: &CMatrix) -> Result<MatrixSpace, StarError> {
        let cands: Vec<HermMatrix> = self
            .basis
            .iter()
            .map(|b| HermMatrix::from_hermitian_part(&b.as_cmatrix().compress(v)))
            .collect();
        let basis = herm_span(&cands, RankOptions::default())?;
        if basis.is_empty() {
            return Err(StarError::ZeroSpace);
        }
        Ok(MatrixSpace::from_orthonormal(v.cols(), basis))
    }

    /// Space spanned by this space and extra Hermitian elements.
    pub fn extended(&self, extra: &[HermMatrix]) -> Result<(MatrixSpace, usize), StarError> {
        let mut v: Vec<Vec<f64>> = self.basis.iter().map(|b| b.to_svec()).collect();
        let added = extend_span(&mut v, extra.iter().map(|e| e.to_svec()).collect(), 1.0, RankOptions::lenient(1e-9))?;
        let basis = v.iter().map(|x| HermMatrix::from_svec(self.n, x)).collect();
        Ok((MatrixSpace::from_orthonormal(self.n, basis), added.len()))
    }

    /// Real coordinates of a Hermitian `x` in the basis and residual.
    pub fn real_coords(&self, x: &HermMatrix) -> (Vec<f64>, f64) {
        let b: Vec<Vec<f64>> = self.basis.iter().map(|b| b.to_svec()).collect();
        coords(&x.to_svec(), &b)
    }
}
