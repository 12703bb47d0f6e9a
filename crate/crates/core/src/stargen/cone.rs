//! Spanning test for the inherited cone `X ∩ PSD`.
//!
//! `X₊` spans `X` iff some `v ∈ X` dominates the support projection `P`
//! of `X`. When no such `v` exists, the separating witness `W ⪰ 0` is
//! orthogonal to `X` and positive on `P`, so every positive element of
//! `X` lives in `ker W`; restricting to that face and repeating yields
//! `span X₊`.

use crate::conesolver::{solve_feasibility, AffineSet, ConicProgram, DualWitness, SolveStatus};
use crate::matcore::span::{null_space, RankOptions};
use crate::matcore::{herm_eig, op_norm, psd_check, CMatrix, HermMatrix};

use super::space::{herm_span, MatrixSpace};
use super::StarError;

#[derive(Clone, Debug)]
pub enum ConeSpan {
    /// Positive elements forming a basis of `X`, with the dominating
    /// element used to build them.
    Spans {
        positive_basis: Vec<HermMatrix>,
        dominating: HermMatrix,
    },
    DoesNotSpan { span_dim: usize },
}

impl ConeSpan {
    pub fn spans(&self) -> bool {
        matches!(self, ConeSpan::Spans { .. })
    }
}

const SOLVE_TOL: f64 = 1e-8;

enum Step {
    Dominated(HermMatrix),
    Face(CMatrix),
}

/// Orthonormal basis (columns) of the joint range of the space.
fn support(x: &MatrixSpace) -> Result<CMatrix, StarError> {
    let n = x.ambient_dim();
    let mut s = CMatrix::zeros(n, n);
    for b in x.basis() {
        let m = b.as_cmatrix();
        s = &s + &m.matmul(m);
    }
    let e = herm_eig(&HermMatrix::from_hermitian_part(&s))?;
    let cutoff = 1e-8 * e.max_value().max(0.0);
    Ok(crate::matcore::span::range_basis(&e, cutoff))
}

/// One facial-reduction step on `x` with support `v` (columns).
fn step(x: &MatrixSpace, v: &CMatrix) -> Result<Step, StarError> {
    let r = v.cols();
    let gens: Vec<HermMatrix> = x
        .basis()
        .iter()
        .map(|b| HermMatrix::from_hermitian_part(&b.as_cmatrix().compress(v)))
        .collect();
    let offset: Vec<f64> = HermMatrix::identity(r).to_svec().iter().map(|t| -t).collect();
    let p = ConicProgram::feasibility(
        vec![r],
        AffineSet::Image {
            offset,
            generators: gens.iter().map(|g| g.to_svec()).collect(),
        },
    );
    let out = solve_feasibility(&p, SOLVE_TOL)?;
    match out.status {
        SolveStatus::Feasible => {
            let params = out.params.unwrap_or_default();
            let mut dom = x.real_element(&params);
            let compressed = HermMatrix::from_hermitian_part(&dom.as_cmatrix().compress(v));
            let m = herm_eig(&compressed)?.min_value();
            if m <= 0.0 {
                return Err(StarError::Inconclusive("dominating element failed re-verification".into()));
            }
            dom = HermMatrix::from_hermitian_part(&dom.as_cmatrix().scale_re(1.0 / m));
            Ok(Step::Dominated(dom))
        }
        SolveStatus::Infeasible => match out.witness {
            Some(DualWitness::Separating { blocks, .. }) => {
                let w = &blocks[0];
                let e = herm_eig(w)?;
                let top = e.max_value();
                let idx: Vec<usize> = (0..r).filter(|&i| e.values[i] <= 1e-5 * top).collect();
                if idx.len() == r {
                    return Err(StarError::Inconclusive("degenerate separating witness".into()));
                }
                let ker = if idx.is_empty() {
                    CMatrix::zeros(r, 0)
                } else {
                    e.vectors.select_cols(&idx)
                };
                Ok(Step::Face(v.matmul(&ker)))
            }
            _ => Err(StarError::Inconclusive("infeasible without separating witness".into())),
        },
        SolveStatus::Marginal => Err(StarError::Inconclusive(format!(
            "cone spanning test marginal (residual {:e})",
            out.primal_residual
        ))),
    }
}

/// Elements of `x` whose range lies in the column space of `q`.
fn restrict_to_face(x: &MatrixSpace, q: &CMatrix) -> Result<Option<MatrixSpace>, StarError> {
    let n = x.ambient_dim();
    let proj = q.matmul(&q.adjoint());
    let comp = &CMatrix::identity(n) - &proj;
    let imgs: Vec<Vec<f64>> = x
        .basis()
        .iter()
        .map(|b| comp.matmul(b.as_cmatrix()).to_real_vec())
        .collect();
    let d = x.dim();
    let rows: Vec<Vec<f64>> = (0..2 * n * n).map(|k| imgs.iter().map(|v| v[k]).collect()).collect();
    let ns = null_space(rows, d, RankOptions::lenient(1e-8))?;
    if ns.is_empty() {
        return Ok(None);
    }
    let elems: Vec<HermMatrix> = ns.iter().map(|c| x.real_element(c)).collect();
    let basis = herm_span(&elems, RankOptions::lenient(1e-8))?;
    Ok(Some(MatrixSpace::from_orthonormal(n, basis)))
}

pub fn cone_spans(x: &MatrixSpace) -> Result<ConeSpan, StarError> {
    let mut cur = x.clone();
    loop {
        let v = support(&cur)?;
        match step(&cur, &v)? {
            Step::Dominated(dom) => {
                if cur.dim() < x.dim() {
                    return Ok(ConeSpan::DoesNotSpan { span_dim: cur.dim() });
                }
                return Ok(ConeSpan::Spans {
                    positive_basis: positive_basis(x, &dom)?,
                    dominating: dom,
                });
            }
            Step::Face(q) => {
                if q.cols() == 0 {
                    return Ok(ConeSpan::DoesNotSpan { span_dim: 0 });
                }
                match restrict_to_face(&cur, &q)? {
                    None => return Ok(ConeSpan::DoesNotSpan { span_dim: 0 }),
                    Some(next) => {
                        if next.dim() >= cur.dim() {
                            return Err(StarError::Inconclusive("facial reduction made no progress".into()));
                        }
                        cur = next;
                    }
                }
            }
        }
    }
}

/// `{v} ∪ {v + s_t b_t}` thinned to a basis; every element is PSD since
/// `v` dominates the support projection and `s_t ≤ 1/(2‖b_t‖)`.
fn positive_basis(x: &MatrixSpace, v: &HermMatrix) -> Result<Vec<HermMatrix>, StarError> {
    let mut cands = vec![v.clone()];
    for b in x.basis() {
        let s = 0.5 / op_norm(b.as_cmatrix())?;
        cands.push(HermMatrix::from_hermitian_part(&(v.as_cmatrix() + &b.as_cmatrix().scale_re(s))));
    }
    let vecs: Vec<Vec<f64>> = cands.iter().map(|c| c.to_svec()).collect();
    let mut basis = Vec::new();
    let picked = crate::matcore::span::extend_span(&mut basis, vecs, 0.0, RankOptions::lenient(1e-9))?;
    let mut out = Vec::with_capacity(picked.len());
    for i in picked {
        let c = cands[i].clone();
        let scale = op_norm(c.as_cmatrix())?;
        if !psd_check(&c, 1e-12 * scale.max(1.0))?.is_positive() {
            return Err(StarError::Inconclusive("positive basis element failed verification".into()));
        }
        out.push(c);
    }
    Ok(out)
}
