//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq`, reducing the
//! 2x2 subproblem to a real symmetric one, then applies the classical
//! Jacobi rotation. Sweeps continue until the off-diagonal Frobenius mass
//! drops below `1e-12·‖M‖_F`.

use super::matrix::{CMatrix, HermMatrix, C64, ZERO};
use super::MatError;

const OFF_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 80;

#[derive(Clone, Debug)]
pub struct HermEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermEigen {
    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Reassembles `U f(Λ) U*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in fv.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let uik = u[(i, k)] * lam;
                if uik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += uik * u[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition `M = U Λ U*` with eigenvalues sorted descending.
pub fn herm_eig(m: &HermMatrix) -> Result<HermEigen, MatError> {
    let a = m.as_cmatrix();
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let n = a.rows();
    let (values, vectors) = jacobi(a.data().to_vec(), CMatrix::identity(n).into_data(), n);
    Ok(sorted(values, vectors, n))
}

/// Same as [`herm_eig`] but starts the rotations from a guessed unitary
/// basis (e.g. the eigenvectors of a nearby matrix).
pub fn herm_eig_warm(m: &HermMatrix, guess: &CMatrix) -> Result<HermEigen, MatError> {
    let a = m.as_cmatrix();
    if !a.is_finite() {
        return Err(MatError::NonFinite);
    }
    let n = a.rows();
    if guess.shape() != (n, n) {
        return herm_eig(m);
    }
    let rotated = a.compress(guess).hermitian_part();
    let (values, vectors) = jacobi(rotated.into_data(), guess.data().to_vec(), n);
    Ok(sorted(values, vectors, n))
}

fn sorted(values: Vec<f64>, vectors: Vec<C64>, n: usize) -> HermEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |i, j| vectors[i * n + order[j]]);
    HermEigen {
        values: vals,
        vectors: vecs,
    }
}

fn off_mass(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: Vec<C64>, mut v: Vec<C64>, n: usize) -> (Vec<f64>, Vec<C64>) {
    for i in 0..n {
        a[i * n + i] = C64::new(a[i * n + i].re, 0.0);
    }
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n <= 1 || scale == 0.0 {
        return ((0..n).map(|i| a[i * n + i].re).collect(), v);
    }
    let target = OFF_TOL * scale;
    let skip = 1e-18 * scale;
    for _ in 0..MAX_SWEEPS {
        if off_mass(&a, n) <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let b = apq.norm();
                if b <= skip {
                    continue;
                }
                let w = apq / b;
                let wc = w.conj();
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * b);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sw = wc * s;
                let cw = wc * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let nkp = akp * c - sw * akq;
                    let nkq = akp * s + cw * akq;
                    a[k * n + p] = nkp;
                    a[k * n + q] = nkq;
                    a[p * n + k] = nkp.conj();
                    a[q * n + k] = nkq.conj();
                }
                a[p * n + p] = C64::new(app - t * b, 0.0);
                a[q * n + q] = C64::new(aqq + t * b, 0.0);
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - sw * vkq;
                    v[k * n + q] = vkp * s + cw * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i].re).collect(), v)
}

/// Positive square root of a PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(m: &HermMatrix) -> Result<HermMatrix, MatError> {
    let e = herm_eig(m)?;
    Ok(HermMatrix::from_hermitian_part(
        &e.reconstruct_with(|x| x.max(0.0).sqrt()),
    ))
}

/// Inverse square root of a positive definite matrix.
pub fn pd_inv_sqrt(m: &HermMatrix) -> Result<HermMatrix, MatError> {
    let e = herm_eig(m)?;
    if e.min_value() <= 0.0 {
        return Err(MatError::NotPositiveDefinite {
            min_eig: e.min_value(),
        });
    }
    Ok(HermMatrix::from_hermitian_part(
        &e.reconstruct_with(|x| 1.0 / x.sqrt()),
    ))
}

/// Orthogonal projection onto the span of eigenvectors with eigenvalue
/// above `cutoff`.
pub fn spectral_projection(e: &HermEigen, cutoff: f64) -> CMatrix {
    e.reconstruct_with(|x| if x > cutoff { 1.0 } else { 0.0 })
}
