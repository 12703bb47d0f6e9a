use crate::matcore::span::{coords, dot, extend_span, orthonormalize, RankOptions};
use crate::matcore::{herm_eig, spectral_projection, CMatrix, HermMatrix};

use super::space::{herm_parts, MatrixSpace};
use super::StarError;

/// A finite-dimensional *-subalgebra of `M_n` with an orthonormal
/// Hermitian basis and its unit `e`.
#[derive(Clone, Debug)]
pub struct AlgebraPresentation {
    n: usize,
    basis: Vec<HermMatrix>,
    unit: HermMatrix,
}

impl AlgebraPresentation {
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[HermMatrix] {
        &self.basis
    }

    pub fn unit(&self) -> &HermMatrix {
        &self.unit
    }

    pub fn as_space(&self) -> MatrixSpace {
        MatrixSpace::from_orthonormal(self.n, self.basis.clone())
    }

    /// `‖x − P_B x‖_F` for a general matrix `x`.
    pub fn residual(&self, x: &CMatrix) -> f64 {
        self.as_space().residual(x)
    }

    /// Largest residual of `b_i b_j` and `b_i*` against the span.
    pub fn closure_defect(&self) -> f64 {
        let s = self.as_space();
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                worst = worst.max(s.residual(&a.as_cmatrix().matmul(b.as_cmatrix())));
            }
        }
        worst
    }

    /// Builds a presentation from an orthonormal Hermitian basis that is
    /// known to span a *-algebra.
    pub fn from_basis(n: usize, basis: Vec<HermMatrix>) -> Result<Self, StarError> {
        let unit = unit_projection(&basis)?;
        Ok(Self { n, basis, unit })
    }
}

const REF_SCALE: f64 = 1.0;

/// Hermitian generators of the complex span of `a b` for Hermitian `a, b`.
fn product_parts(a: &HermMatrix, b: &HermMatrix) -> [Vec<f64>; 2] {
    let p = a.as_cmatrix().matmul(b.as_cmatrix());
    let [h, k] = herm_parts(&p);
    [h.to_svec(), k.to_svec()]
}

/// Smallest *-subalgebra containing `x`, by semi-naive closure under
/// products until the dimension stabilizes.
pub fn generate_star_algebra(x: &MatrixSpace) -> Result<AlgebraPresentation, StarError> {
    let n = x.ambient_dim();
    let full = n * n;
    let opts = RankOptions::default();
    let mut basis: Vec<Vec<f64>> = x.basis().iter().map(|b| b.to_svec()).collect();
    let mut frontier: Vec<usize> = (0..basis.len()).collect();
    while !frontier.is_empty() && basis.len() < full {
        let herm: Vec<HermMatrix> = basis.iter().map(|v| HermMatrix::from_svec(n, v)).collect();
        let mut cands = Vec::new();
        for &f in &frontier {
            for a in &herm {
                cands.extend(product_parts(a, &herm[f]));
            }
        }
        let before = basis.len();
        extend_span(&mut basis, cands, REF_SCALE, opts)?;
        frontier = (before..basis.len()).collect();
    }
    let basis: Vec<HermMatrix> = basis.iter().map(|v| HermMatrix::from_svec(n, v)).collect();
    AlgebraPresentation::from_basis(n, basis)
}

/// Smallest subspace containing `x` closed under `a b* c`.
///
/// For self-adjoint `x` this is the span of odd words, computed as
/// `x·B` with `B` the unital algebra of even words. Iterating `a b* c`
/// directly builds odd powers, whose weak spectral directions fall
/// below the rank cutoffs.
pub fn generate_tro(x: &MatrixSpace) -> Result<Vec<HermMatrix>, StarError> {
    let n = x.ambient_dim();
    let opts = RankOptions::default();
    let gens = x.basis();
    let mut even = vec![HermMatrix::identity(n).to_svec()];
    let s = 1.0 / (n as f64).sqrt();
    even[0].iter_mut().for_each(|v| *v *= s);
    let cands = gens.iter().flat_map(|a| gens.iter().flat_map(move |b| product_parts(a, b))).collect();
    extend_span(&mut even, cands, REF_SCALE, opts)?;
    let even = even.iter().map(|v| HermMatrix::from_svec(n, v)).collect();
    let b = generate_star_algebra(&MatrixSpace::from_orthonormal(n, even))?;
    let mut basis: Vec<Vec<f64>> = gens.iter().map(|g| g.to_svec()).collect();
    let cands = gens.iter().flat_map(|a| b.basis().iter().flat_map(move |c| product_parts(a, c))).collect();
    extend_span(&mut basis, cands, REF_SCALE, opts)?;
    Ok(basis.iter().map(|v| HermMatrix::from_svec(n, v)).collect())
}

/// Projection onto the joint range of the basis elements, verified to be
/// the unit of the algebra.
pub fn unit_projection(basis: &[HermMatrix]) -> Result<HermMatrix, StarError> {
    let n = basis.first().map(|b| b.dim()).ok_or(StarError::ZeroSpace)?;
    let mut s = CMatrix::zeros(n, n);
    for b in basis {
        let m = b.as_cmatrix();
        s = &s + &m.matmul(m);
    }
    let e = herm_eig(&HermMatrix::from_hermitian_part(&s))?;
    let cutoff = 1e-8 * e.max_value().max(0.0);
    let p = HermMatrix::from_hermitian_part(&spectral_projection(&e, cutoff));
    let vecs = orthonormalize(
        basis.iter().map(|b| b.to_svec()).collect(),
        RankOptions::lenient(1e-10),
    )?;
    let (_, res) = coords(&p.to_svec(), &vecs);
    let mut residual = res;
    for b in basis {
        let bm = b.as_cmatrix();
        residual = residual.max(p.as_cmatrix().matmul(bm).dist(bm));
        residual = residual.max(bm.matmul(p.as_cmatrix()).dist(bm));
    }
    if residual > 1e-8 {
        return Err(StarError::UnitNotInAlgebra { residual });
    }
    Ok(p)
}

/// Whether the TRO generated by `x` equals the generated *-algebra.
pub fn tro_equals_algebra(x: &MatrixSpace) -> Result<bool, StarError> {
    let alg = generate_star_algebra(x)?;
    let tro = generate_tro(x)?;
    let ortho = |v: Vec<Vec<f64>>| orthonormalize(v, RankOptions::lenient(1e-10));
    let a = ortho(alg.basis().iter().map(|b| b.to_svec()).collect())?;
    let t = ortho(tro.iter().map(|b| b.to_svec()).collect())?;
    if a.len() != t.len() {
        return Ok(false);
    }
    let worst = |from: &[Vec<f64>], onto: &[Vec<f64>]| {
        from.iter().map(|v| coords(v, onto).1).fold(0.0f64, f64::max)
    };
    Ok(worst(&a, &t) <= 1e-8 && worst(&t, &a) <= 1e-8 && a.iter().all(|v| dot(v, v) > 0.0))
}
