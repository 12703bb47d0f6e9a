//! Rank-revealing orthonormalization of real vector families.
//!
//! Spans of matrices are handled through isometric real coordinates
//! (`svec` for Hermitian matrices, interleaved `[re, im]` otherwise), so a
//! single pivoted Gram–Schmidt serves every closure and null-space
//! computation in the crate.

use super::matrix::{CMatrix, C64};
use super::MatError;

/// Thresholds for numerical rank decisions, relative to the largest
/// singular value (approximated by pivoted Gram–Schmidt residuals).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankOptions {
    pub cutoff: f64,
    pub ambiguous_lo: f64,
    pub ambiguous_hi: f64,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self {
            cutoff: 1e-8,
            ambiguous_lo: 1e-10,
            ambiguous_hi: 1e-6,
        }
    }
}

impl RankOptions {
    /// Same cutoff with the ambiguity band switched off.
    pub fn lenient(cutoff: f64) -> Self {
        Self {
            cutoff,
            ambiguous_lo: cutoff,
            ambiguous_hi: cutoff,
        }
    }

    fn check(&self, ratio: f64) -> Result<bool, MatError> {
        let keep = ratio >= self.cutoff;
        let ambiguous = if keep {
            ratio < self.ambiguous_hi
        } else {
            ratio >= self.ambiguous_lo
        };
        if ambiguous {
            return Err(MatError::RankAmbiguous { ratio });
        }
        Ok(keep)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

/// Removes the components along an orthonormal basis (two passes).
pub fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            if c != 0.0 {
                axpy(v, -c, q);
            }
        }
    }
}

/// Coordinates of `v` in an orthonormal basis and the residual norm.
pub fn coords(v: &[f64], basis: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let c: Vec<f64> = basis.iter().map(|q| dot(v, q)).collect();
    let mut r = v.to_vec();
    for (q, &ci) in basis.iter().zip(&c) {
        axpy(&mut r, -ci, q);
    }
    (c, norm(&r))
}

/// Extends the orthonormal `basis` by the new directions among
/// `candidates`, using pivoted Gram–Schmidt on the residuals. Ratios are
/// measured against `max(ref_scale, largest candidate norm)`. Returns the
/// indices of the candidates that were accepted as pivots.
pub fn extend_span(
    basis: &mut Vec<Vec<f64>>,
    candidates: Vec<Vec<f64>>,
    ref_scale: f64,
    opts: RankOptions,
) -> Result<Vec<usize>, MatError> {
    let scale = candidates
        .iter()
        .map(|c| norm(c))
        .fold(ref_scale, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let mut res: Vec<Vec<f64>> = candidates;
    for r in res.iter_mut() {
        project_out(r, basis);
    }
    let mut norms: Vec<f64> = res.iter().map(|r| norm(r)).collect();
    let mut alive: Vec<bool> = vec![true; res.len()];
    let mut accepted = Vec::new();
    loop {
        let pick = (0..res.len())
            .filter(|&i| alive[i])
            .max_by(|&i, &j| norms[i].total_cmp(&norms[j]));
        let Some(p) = pick else { break };
        let ratio = norms[p] / scale;
        if !opts.check(ratio)? {
            break;
        }
        alive[p] = false;
        let mut q = std::mem::take(&mut res[p]);
        project_out(&mut q, basis);
        let nq = norm(&q);
        if nq == 0.0 {
            continue;
        }
        q.iter_mut().for_each(|x| *x /= nq);
        for i in 0..res.len() {
            if alive[i] {
                let c = dot(&res[i], &q);
                axpy(&mut res[i], -c, &q);
                norms[i] = norm(&res[i]);
            }
        }
        basis.push(q);
        accepted.push(p);
    }
    Ok(accepted)
}

/// Orthonormal basis of the span of `vectors` (pivoted, rank-revealing).
pub fn orthonormalize(vectors: Vec<Vec<f64>>, opts: RankOptions) -> Result<Vec<Vec<f64>>, MatError> {
    let mut basis = Vec::new();
    extend_span(&mut basis, vectors, 0.0, opts)?;
    Ok(basis)
}

/// Orthonormal basis of `{x : row_i · x = 0 ∀ i}` in `R^ncols`.
pub fn null_space(rows: Vec<Vec<f64>>, ncols: usize, opts: RankOptions) -> Result<Vec<Vec<f64>>, MatError> {
    null_space_scaled(rows, ncols, 0.0, opts)
}

/// [`null_space`] with rank decisions measured against at least
/// `ref_scale`, so rows that are pure roundoff are treated as zero.
pub fn null_space_scaled(
    rows: Vec<Vec<f64>>,
    ncols: usize,
    ref_scale: f64,
    opts: RankOptions,
) -> Result<Vec<Vec<f64>>, MatError> {
    let mut basis = Vec::new();
    extend_span(&mut basis, rows, ref_scale, opts)?;
    let rank = basis.len();
    let units: Vec<Vec<f64>> = (0..ncols)
        .map(|i| {
            let mut e = vec![0.0; ncols];
            e[i] = 1.0;
            e
        })
        .collect();
    extend_span(&mut basis, units, 1.0, RankOptions::lenient(1e-6))?;
    Ok(basis.split_off(rank))
}

/// Complex Gram–Schmidt on the columns of `m`; columns whose residual
/// falls below `cutoff` times the largest column norm are dropped.
pub fn orthonormal_columns(m: &CMatrix, cutoff: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    let scale = (0..cols)
        .map(|j| m.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut q: Vec<Vec<C64>> = Vec::new();
    for j in 0..cols {
        let mut v = m.col(j);
        for _ in 0..2 {
            for b in &q {
                let c: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if scale > 0.0 && nv > cutoff * scale {
            v.iter_mut().for_each(|z| *z /= nv);
            q.push(v);
        }
    }
    let mut out = CMatrix::zeros(rows, q.len());
    for (j, v) in q.iter().enumerate() {
        out.set_col(j, v);
    }
    if q.is_empty() {
        return CMatrix::from_vec_unchecked(rows, 0, Vec::new());
    }
    out
}

/// Orthonormal basis (as columns) of the column space of a PSD-like matrix
/// given by its eigenvectors with eigenvalue above `cutoff`.
pub fn range_basis(e: &super::HermEigen, cutoff: f64) -> CMatrix {
    let idx: Vec<usize> = e
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > cutoff)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return CMatrix::from_vec_unchecked(e.vectors.rows(), 0, Vec::new());
    }
    e.vectors.select_cols(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_rank_and_null_space() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 1.0]];
        let b = orthonormalize(rows.clone(), RankOptions::default()).unwrap();
        assert_eq!(b.len(), 2);
        let ns = null_space(rows.clone(), 3, RankOptions::default()).unwrap();
        assert_eq!(ns.len(), 1);
        for r in &rows {
            assert!(dot(r, &ns[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn ambiguous_band_is_reported() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1e-8]];
        let err = orthonormalize(rows, RankOptions::default()).unwrap_err();
        assert!(matches!(err, MatError::RankAmbiguous { .. }));
    }

    #[test]
    fn complex_columns_are_orthonormal() {
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64, (i * j) as f64 + 1.0));
        let q = orthonormal_columns(&m, 1e-10);
        let g = q.adjoint_mul(&q);
        assert!(g.dist(&CMatrix::identity(q.cols())) < 1e-12);
    }
}
