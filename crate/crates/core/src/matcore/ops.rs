//! Norms, positivity tests and matrix-level amplification.

use super::eigen::herm_eig;
use super::matrix::{CMatrix, HermMatrix, C64, ZERO};
use super::MatError;

/// Largest singular value, from the top eigenvalue of `M*M` or `MM*`
/// (whichever is smaller).
pub fn op_norm(m: &CMatrix) -> Result<f64, MatError> {
    if !m.is_finite() {
        return Err(MatError::NonFinite);
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    let g = if m.cols() <= m.rows() {
        m.adjoint_mul(m)
    } else {
        m.matmul(&m.adjoint())
    };
    let e = herm_eig(&HermMatrix::from_hermitian_part(&g))?;
    Ok(e.max_value().max(0.0).sqrt())
}

/// Operator norm of a Hermitian matrix: largest absolute eigenvalue.
pub fn herm_norm(m: &HermMatrix) -> Result<f64, MatError> {
    let e = herm_eig(m)?;
    Ok(e.max_value().abs().max(e.min_value().abs()))
}

#[derive(Clone, Debug)]
pub enum PsdVerdict {
    Positive { min_eig: f64 },
    /// `witness` is a unit vector with `ξ*Mξ = min_eig < −tol`.
    Indefinite { min_eig: f64, witness: Vec<C64> },
}

impl PsdVerdict {
    pub fn is_positive(&self) -> bool {
        matches!(self, PsdVerdict::Positive { .. })
    }

    pub fn min_eig(&self) -> f64 {
        match self {
            PsdVerdict::Positive { min_eig } | PsdVerdict::Indefinite { min_eig, .. } => *min_eig,
        }
    }
}

pub fn psd_check(m: &HermMatrix, tol: f64) -> Result<PsdVerdict, MatError> {
    let e = herm_eig(m)?;
    let n = m.dim();
    if n == 0 {
        return Ok(PsdVerdict::Positive { min_eig: 0.0 });
    }
    let min_eig = e.min_value();
    if min_eig >= -tol {
        Ok(PsdVerdict::Positive { min_eig })
    } else {
        Ok(PsdVerdict::Indefinite {
            min_eig,
            witness: e.vectors.col(n - 1),
        })
    }
}

/// Coordinates of a level-`k` element: `coeffs[i][j][t]` multiplies
/// `basis[t]` in block `(i, j)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LevelCoeffs {
    pub k: usize,
    pub dim: usize,
    data: Vec<C64>,
}

impl LevelCoeffs {
    pub fn zeros(k: usize, dim: usize) -> Self {
        Self {
            k,
            dim,
            data: vec![ZERO; k * k * dim],
        }
    }

    pub fn from_fn(k: usize, dim: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut c = Self::zeros(k, dim);
        for i in 0..k {
            for j in 0..k {
                for t in 0..dim {
                    c.data[(i * k + j) * dim + t] = f(i, j, t);
                }
            }
        }
        c
    }

    pub fn get(&self, i: usize, j: usize) -> &[C64] {
        let o = (i * self.k + j) * self.dim;
        &self.data[o..o + self.dim]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut [C64] {
        let o = (i * self.k + j) * self.dim;
        &mut self.data[o..o + self.dim]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// Coordinates of `[x_ji*]`, assuming a basis of Hermitian elements.
    pub fn star(&self) -> Self {
        Self::from_fn(self.k, self.dim, |i, j, t| self.get(j, i)[t].conj())
    }
}

/// The `kn×kn` matrix whose `(i, j)` block is `Σ_t coeffs[i][j][t]·basis[t]`.
pub fn amplify(coeffs: &LevelCoeffs, basis: &[CMatrix]) -> Result<CMatrix, MatError> {
    if coeffs.dim != basis.len() {
        return Err(MatError::ShapeMismatch {
            expected: (coeffs.dim, 1),
            found: (basis.len(), 1),
        });
    }
    let (n, m) = basis.first().map(|b| b.shape()).unwrap_or((0, 0));
    for b in basis {
        if b.shape() != (n, m) {
            return Err(MatError::ShapeMismatch {
                expected: (n, m),
                found: b.shape(),
            });
        }
    }
    let k = coeffs.k;
    let mut out = CMatrix::zeros(k * n, k * m);
    for i in 0..k {
        for j in 0..k {
            let c = coeffs.get(i, j);
            for (t, b) in basis.iter().enumerate() {
                if c[t] == ZERO {
                    continue;
                }
                for r in 0..n {
                    for s in 0..m {
                        out[(i * n + r, j * m + s)] += c[t] * b[(r, s)];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Minimum-norm solution of `G c = h` for Hermitian `G`, discarding
/// eigenvalues below `rcond` times the largest.
pub fn herm_pinv_solve(g: &HermMatrix, h: &[C64], rcond: f64) -> Result<Vec<C64>, MatError> {
    let e = herm_eig(g)?;
    let n = g.dim();
    let top = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = vec![ZERO; n];
    for (k, &lam) in e.values.iter().enumerate() {
        if lam.abs() <= rcond * top || lam == 0.0 {
            continue;
        }
        let mut proj = ZERO;
        for i in 0..n {
            proj += e.vectors[(i, k)].conj() * h[i];
        }
        proj /= lam;
        for i in 0..n {
            out[i] += e.vectors[(i, k)] * proj;
        }
    }
    Ok(out)
}

/// Real symmetric variant of [`herm_pinv_solve`].
pub fn sym_pinv_solve(g: &[Vec<f64>], h: &[f64], rcond: f64) -> Result<Vec<f64>, MatError> {
    let n = h.len();
    let m = HermMatrix::from_hermitian_part(&CMatrix::from_fn(n, n, |i, j| C64::new(g[i][j], 0.0)));
    let hc: Vec<C64> = h.iter().map(|&v| C64::new(v, 0.0)).collect();
    Ok(herm_pinv_solve(&m, &hc, rcond)?.iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::random::{random_cmatrix, rng};

    #[test]
    fn norm_examples() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(2.0, 0.0);
        assert!((op_norm(&m).unwrap() - 2.0).abs() < 1e-14);
        assert!((op_norm(&CMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn psd_examples() {
        let v = psd_check(&HermMatrix::from_real_diag(&[1.0, 0.0]), 1e-9).unwrap();
        assert!(v.is_positive());
        match psd_check(&HermMatrix::from_real_diag(&[1.0, -1.0]), 1e-9).unwrap() {
            PsdVerdict::Indefinite { min_eig, witness } => {
                assert!((min_eig + 1.0).abs() < 1e-14);
                assert!((witness[1].norm() - 1.0).abs() < 1e-12);
            }
            _ => panic!("expected indefinite"),
        }
        let mut r = rng(3);
        let b = random_cmatrix(&mut r, 4, 6);
        let g = HermMatrix::from_hermitian_part(&b.adjoint_mul(&b));
        assert!(psd_check(&g, 1e-9).unwrap().is_positive());
    }

    #[test]
    fn amplify_examples() {
        let x = CMatrix::from_real_diag(&[1.0, -3.0]);
        let c = LevelCoeffs::from_fn(1, 1, |_, _, _| C64::new(1.0, 0.0));
        assert_eq!(amplify(&c, std::slice::from_ref(&x)).unwrap(), x);
        let c2 = LevelCoeffs::from_fn(2, 1, |i, j, _| if i == j { C64::new(1.0, 0.0) } else { ZERO });
        let y = amplify(&c2, std::slice::from_ref(&x)).unwrap();
        assert!((op_norm(&y).unwrap() - 3.0).abs() < 1e-12);
        let bad = [x.clone(), CMatrix::identity(3)];
        let c3 = LevelCoeffs::zeros(1, 2);
        assert!(matches!(amplify(&c3, &bad), Err(MatError::ShapeMismatch { .. })));
    }
}
