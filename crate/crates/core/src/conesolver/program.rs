//! Conic programs over products of Hermitian PSD blocks.
//!
//! Points are stacked `svec` coordinates of the blocks, so the Frobenius
//! geometry on blocks is the Euclidean geometry on points.

use crate::matcore::span::{dot, norm};
use crate::matcore::{HermMatrix, MatError};

use super::ConeError;

/// The affine part of a program.
#[derive(Clone, Debug)]
pub enum AffineSet {
    /// `{x : rows[i]·x = rhs[i]}`.
    Equality { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
    /// `{offset + Σ p_j generators[j]}`.
    Image {
        offset: Vec<f64>,
        generators: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub blocks: Vec<usize>,
    pub affine: AffineSet,
    /// Linear functional to minimize, in stacked coordinates.
    pub objective: Option<Vec<f64>>,
}

impl ConicProgram {
    pub fn feasibility(blocks: Vec<usize>, affine: AffineSet) -> Self {
        Self {
            blocks,
            affine,
            objective: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut o = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        o.push(0);
        for n in &self.blocks {
            acc += n * n;
            o.push(acc);
        }
        o
    }

    /// Splits a stacked point into Hermitian blocks.
    pub fn unstack(&self, x: &[f64]) -> Vec<HermMatrix> {
        let o = self.offsets();
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, &n)| HermMatrix::from_svec(n, &x[o[b]..o[b + 1]]))
            .collect()
    }

    pub fn stack(blocks: &[HermMatrix]) -> Vec<f64> {
        let mut v = Vec::new();
        for b in blocks {
            v.extend(b.to_svec());
        }
        v
    }

    pub(crate) fn validate(&self) -> Result<(), ConeError> {
        let n = self.dim();
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(ConeError::BadProgram("empty PSD block".into()));
        }
        match &self.affine {
            AffineSet::Equality { rows, rhs } => {
                if rows.len() != rhs.len() {
                    return Err(ConeError::BadProgram(format!(
                        "{} constraint rows but {} right-hand sides",
                        rows.len(),
                        rhs.len()
                    )));
                }
                if let Some(r) = rows.iter().find(|r| r.len() != n) {
                    return Err(ConeError::BadProgram(format!(
                        "constraint row of length {}, expected {n}",
                        r.len()
                    )));
                }
                if rows.iter().flatten().chain(rhs).any(|v| !v.is_finite()) {
                    return Err(ConeError::Mat(MatError::NonFinite));
                }
            }
            AffineSet::Image { offset, generators } => {
                if offset.len() != n || generators.iter().any(|g| g.len() != n) {
                    return Err(ConeError::BadProgram(format!(
                        "image generators must have length {n}"
                    )));
                }
                if offset.iter().chain(generators.iter().flatten()).any(|v| !v.is_finite()) {
                    return Err(ConeError::Mat(MatError::NonFinite));
                }
            }
        }
        if let Some(c) = &self.objective {
            if c.len() != n {
                return Err(ConeError::BadProgram("objective length mismatch".into()));
            }
        }
        Ok(())
    }
}

/// Cached orthogonal projector onto the affine set.
pub(crate) struct AffineProjector {
    kind: Kind,
    /// A point of the affine set (minimal norm for equality form).
    pub base: Vec<f64>,
}

enum Kind {
    /// Orthonormal basis of the row space, with `q_k·x = beta_k` on the set.
    Rows { q: Vec<Vec<f64>>, beta: Vec<f64> },
    /// Orthonormal basis of the direction space, plus the triangular
    /// factor `G = Q R` restricted to the pivots.
    Cols {
        q: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        pivots: Vec<usize>,
        ngen: usize,
    },
}

pub(crate) enum Factored {
    Ok(AffineProjector),
    /// Equations are inconsistent; the value is the residual of the
    /// offending right-hand side after elimination.
    Inconsistent(f64),
}

const DEP_TOL: f64 = 1e-9;

impl AffineProjector {
    pub fn new(p: &ConicProgram) -> Factored {
        let n = p.dim();
        match &p.affine {
            AffineSet::Equality { rows, rhs } => {
                let bscale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let mut q: Vec<Vec<f64>> = Vec::new();
                let mut beta: Vec<f64> = Vec::new();
                for (r, &b) in rows.iter().zip(rhs) {
                    let nr = norm(r);
                    if nr == 0.0 {
                        if b.abs() > 1e-12 * (1.0 + bscale) {
                            return Factored::Inconsistent(b.abs());
                        }
                        continue;
                    }
                    let mut v: Vec<f64> = r.iter().map(|x| x / nr).collect();
                    let mut bv = b / nr;
                    for _ in 0..2 {
                        for (qk, &bk) in q.iter().zip(&beta) {
                            let c = dot(&v, qk);
                            if c != 0.0 {
                                v.iter_mut().zip(qk).for_each(|(a, b)| *a -= c * b);
                                bv -= c * bk;
                            }
                        }
                    }
                    let nv = norm(&v);
                    if nv < DEP_TOL {
                        if bv.abs() > 1e-7 * (1.0 + bscale / nr) {
                            return Factored::Inconsistent(bv.abs());
                        }
                        continue;
                    }
                    v.iter_mut().for_each(|x| *x /= nv);
                    q.push(v);
                    beta.push(bv / nv);
                }
                let mut base = vec![0.0; n];
                for (qk, &bk) in q.iter().zip(&beta) {
                    base.iter_mut().zip(qk).for_each(|(a, b)| *a += bk * b);
                }
                Factored::Ok(AffineProjector {
                    kind: Kind::Rows { q, beta },
                    base,
                })
            }
            AffineSet::Image { offset, generators } => {
                let mut q: Vec<Vec<f64>> = Vec::new();
                let mut r: Vec<Vec<f64>> = Vec::new();
                let mut pivots = Vec::new();
                for (j, g) in generators.iter().enumerate() {
                    let ng = norm(g);
                    if ng == 0.0 {
                        continue;
                    }
                    let mut v = g.clone();
                    let mut coef = vec![0.0; q.len()];
                    for _ in 0..2 {
                        for (k, qk) in q.iter().enumerate() {
                            let c = dot(&v, qk);
                            v.iter_mut().zip(qk).for_each(|(a, b)| *a -= c * b);
                            coef[k] += c;
                        }
                    }
                    let nv = norm(&v);
                    if nv < DEP_TOL * ng {
                        continue;
                    }
                    v.iter_mut().for_each(|x| *x /= nv);
                    coef.push(nv);
                    q.push(v);
                    r.push(coef);
                    pivots.push(j);
                }
                Factored::Ok(AffineProjector {
                    kind: Kind::Cols {
                        q,
                        r,
                        pivots,
                        ngen: generators.len(),
                    },
                    base: offset.clone(),
                })
            }
        }
    }

    /// Orthogonal projection of `v` onto the affine set, in place.
    pub fn project(&self, v: &mut [f64]) {
        match &self.kind {
            Kind::Rows { q, beta } => {
                for (qk, bk) in q.iter().zip(beta) {
                    let c = dot(v, qk) - bk;
                    v.iter_mut().zip(qk).for_each(|(a, b)| *a -= c * b);
                }
            }
            Kind::Cols { q, .. } => {
                let d: Vec<f64> = v.iter().zip(&self.base).map(|(a, b)| a - b).collect();
                let coefs: Vec<f64> = q.iter().map(|qk| dot(&d, qk)).collect();
                v.copy_from_slice(&self.base);
                for (qk, c) in q.iter().zip(coefs) {
                    v.iter_mut().zip(qk).for_each(|(a, b)| *a += c * b);
                }
            }
        }
    }

    /// Projection of `v` onto the normal space of the affine set.
    pub fn normal_part(&self, v: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Rows { q, .. } => {
                let mut out = vec![0.0; v.len()];
                for qk in q {
                    let c = dot(v, qk);
                    out.iter_mut().zip(qk).for_each(|(a, b)| *a += c * b);
                }
                out
            }
            Kind::Cols { q, .. } => {
                let mut out = v.to_vec();
                crate::matcore::span::project_out(&mut out, q);
                out
            }
        }
    }

    /// Parameters `p` with `x = offset + G p` (image form only).
    pub fn parameters(&self, x: &[f64]) -> Option<Vec<f64>> {
        let Kind::Cols { q, r, pivots, ngen } = &self.kind else {
            return None;
        };
        let d: Vec<f64> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        let c: Vec<f64> = q.iter().map(|qk| dot(&d, qk)).collect();
        let m = q.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = c[i];
            for j in i + 1..m {
                s -= r[j][i] * y[j];
            }
            y[i] = s / r[i][i];
        }
        let mut p = vec![0.0; *ngen];
        for (k, &j) in pivots.iter().enumerate() {
            p[j] = y[k];
        }
        Some(p)
    }
}
