//! Function spaces on a finite set and their Shilov boundary.
//!
//! For a selfadjoint `X ⊂ C(K)` every optimum of `|f(k)|` over a sup-norm
//! ball is attained at a real function: if `f(k) = |f(k)| e^{iθ}` then
//! `Re(e^{−iθ} f)` lies in `X`, has no larger norm and the same value at
//! `k`. Looseness of a point is therefore a single real LP over the real
//! part of `X`.

use std::collections::BTreeSet;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;
use thiserror::Error;

use crate::envelope::{compute_envelope, EnvelopeError, EnvelopeOptions};
use crate::matcore::span::{coords, dot, norm, orthonormalize, project_out, RankOptions};
use crate::matcore::{CMatrix, MatError, C64};
use crate::stargen::validate_space;

/// Points with `|sup − 1|` inside this band are neither loose nor essential.
pub const LOOSE_BAND: (f64, f64) = (1e-9, 1e-6);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncError {
    #[error("function {index} has {found} values, expected {expected}")]
    Shape { index: usize, expected: usize, found: usize },
    #[error("function values are not finite")]
    NonFinite,
    #[error("no points or no nonzero functions")]
    ZeroSpace,
    #[error("no function in the space is strictly positive on the non-vanishing points")]
    ConeDoesNotSpan,
    #[error("looseness of point class {class} is inconclusive (sup {sup:.12})")]
    Inconclusive { class: usize, sup: f64 },
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// A selfadjoint subspace of `C(K)`, `K = {0..points}`.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionSpace {
    pub points: usize,
    /// Orthonormal real functions; they span the real part of `X` over `R`
    /// and `X` itself over `C`.
    pub basis: Vec<Vec<f64>>,
    /// Whether the given generators were already closed under conjugation.
    pub conjugation_closed: bool,
}

impl FunctionSpace {
    /// Span of the generators and their conjugates.
    pub fn new(points: usize, generators: &[Vec<C64>]) -> Result<Self, FuncError> {
        if points == 0 || generators.is_empty() {
            return Err(FuncError::ZeroSpace);
        }
        for (index, g) in generators.iter().enumerate() {
            if g.len() != points {
                return Err(FuncError::Shape { index, expected: points, found: g.len() });
            }
            if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(FuncError::NonFinite);
            }
        }
        let conjugation_closed = conjugation_residual(generators)? <= 1e-9;
        let parts: Vec<Vec<f64>> = generators
            .iter()
            .flat_map(|g| [g.iter().map(|z| z.re).collect(), g.iter().map(|z| z.im).collect()])
            .collect();
        let basis = orthonormalize(parts, RankOptions::default())?;
        if basis.is_empty() {
            return Err(FuncError::ZeroSpace);
        }
        Ok(Self { points, basis, conjugation_closed })
    }

    pub fn from_real(points: usize, generators: &[Vec<f64>]) -> Result<Self, FuncError> {
        let g: Vec<Vec<C64>> = generators
            .iter()
            .map(|f| f.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::new(points, &g)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Values of the basis functions at point `l`.
    pub fn column(&self, l: usize) -> Vec<f64> {
        self.basis.iter().map(|b| b[l]).collect()
    }

    /// Restriction of `X` to the given points, in that order.
    pub fn restrict(&self, points: &[usize]) -> Result<Self, FuncError> {
        let g: Vec<Vec<f64>> = self.basis.iter().map(|b| points.iter().map(|&l| b[l]).collect()).collect();
        Self::from_real(points.len(), &g)
    }

    /// The basis as diagonal matrices.
    pub fn diagonal_generators(&self) -> Vec<CMatrix> {
        self.basis.iter().map(|b| CMatrix::from_real_diag(b)).collect()
    }
}

/// Largest residual of a conjugated generator against the complex span.
fn conjugation_residual(generators: &[Vec<C64>]) -> Result<f64, FuncError> {
    let real_form = |v: &[C64]| -> Vec<f64> { v.iter().flat_map(|z| [z.re, z.im]).collect() };
    let mut family = Vec::new();
    for g in generators {
        family.push(real_form(g));
        let ig: Vec<C64> = g.iter().map(|z| z * C64::i()).collect();
        family.push(real_form(&ig));
    }
    let span = orthonormalize(family, RankOptions::lenient(1e-10))?;
    let mut worst = 0.0f64;
    for g in generators {
        let scale = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let c: Vec<C64> = g.iter().map(|z| z.conj()).collect();
        let (_, res) = coords(&real_form(&c), &span);
        worst = worst.max(res / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointVerdict {
    pub pass: usize,
    pub class: usize,
    /// `sup |f(k)|` over the unit ball of the other retained points;
    /// `None` when unbounded.
    pub sup: Option<f64>,
    /// Values on `K` of a maximizer, or of a function vanishing on the
    /// other retained points with value 1 when the sup is unbounded.
    pub witness: Vec<f64>,
    pub removed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Boundary {
    /// Classes of points not separated by `X`, excluding vanishing points,
    /// ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    pub vanishing: Vec<usize>,
    /// Original point to class index.
    pub point_map: Vec<Option<usize>>,
    /// Indices into `classes` of the boundary, ascending.
    pub retained: Vec<usize>,
    pub trace: Vec<PointVerdict>,
    /// A function in `X` that is at least 1 on every non-vanishing point.
    pub positive_witness: Vec<f64>,
}

impl Boundary {
    /// Original points of the boundary classes.
    pub fn boundary_points(&self) -> Vec<Vec<usize>> {
        self.retained.iter().map(|&c| self.classes[c].clone()).collect()
    }

    /// One point per boundary class.
    pub fn representatives(&self) -> Vec<usize> {
        self.retained.iter().map(|&c| self.classes[c][0]).collect()
    }
}

fn scale_of(fs: &FunctionSpace) -> f64 {
    fs.basis
        .iter()
        .flat_map(|b| b.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE)
}

/// Groups points by their value vectors; returns classes and vanishing points.
pub fn quotient(fs: &FunctionSpace) -> (Vec<Vec<usize>>, Vec<usize>) {
    let tol = 1e-9 * scale_of(fs);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut vanishing = Vec::new();
    for l in 0..fs.points {
        let col = fs.column(l);
        if col.iter().all(|x| x.abs() <= tol) {
            vanishing.push(l);
            continue;
        }
        let hit = classes.iter_mut().find(|c| {
            let rep = fs.column(c[0]);
            rep.iter().zip(&col).all(|(a, b)| (a - b).abs() <= tol)
        });
        match hit {
            Some(c) => c.push(l),
            None => classes.push(vec![l]),
        }
    }
    (classes, vanishing)
}

fn evaluate(fs: &FunctionSpace, c: &[f64], l: usize) -> f64 {
    fs.basis.iter().zip(c).map(|(b, x)| b[l] * x).sum()
}

/// Some `f ∈ X` with `f ≥ 1` on `points`.
fn positive_function(fs: &FunctionSpace, points: &[usize]) -> Result<Option<Vec<f64>>, FuncError> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..fs.dim()).map(|_| p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for &l in points {
        let expr: Vec<_> = vars.iter().zip(fs.column(l)).map(|(&v, a)| (v, a)).collect();
        p.add_constraint(&expr[..], ComparisonOp::Ge, 1.0);
    }
    match p.solve() {
        Ok(s) => Ok(Some(vars.iter().map(|&v| s[v]).collect())),
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(e) => Err(FuncError::Lp(e.to_string())),
    }
}

/// `sup f(k)` over real `f ∈ X` with `|f(l)| ≤ 1` on `others` (`None` if
/// unbounded), with coefficients of a witness: the maximizer, or a
/// function vanishing on `others` with `f(k) = 1`.
///
/// The sup is finite iff the value vector of `k` lies in the span of those
/// of `others`; the LP is then posed over that span, where the feasible
/// set is a bounded polytope.
fn point_sup(fs: &FunctionSpace, k: usize, others: &[usize]) -> Result<(Option<f64>, Vec<f64>), FuncError> {
    let ck = fs.column(k);
    let rows = orthonormalize(others.iter().map(|&l| fs.column(l)).collect(), RankOptions::lenient(1e-10))?;
    let (_, res) = coords(&ck, &rows);
    if res > 1e-8 * norm(&ck) {
        let mut d = ck.clone();
        project_out(&mut d, &rows);
        let s = dot(&d, &ck);
        return Ok((None, d.into_iter().map(|x| x / s).collect()));
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = rows.iter().map(|w| p.add_var(dot(w, &ck), (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for &l in others {
        let cl = fs.column(l);
        let expr: Vec<_> = vars.iter().zip(&rows).map(|(&v, w)| (v, dot(w, &cl))).collect();
        p.add_constraint(&expr[..], ComparisonOp::Le, 1.0);
        p.add_constraint(&expr[..], ComparisonOp::Ge, -1.0);
    }
    let sol = p.solve().map_err(|e| FuncError::Lp(e.to_string()))?;
    if !sol.objective().is_finite() {
        return Err(FuncError::Lp("non-finite optimum".into()));
    }
    let mut c = vec![0.0; fs.dim()];
    for (&v, w) in vars.iter().zip(&rows) {
        for (ci, wi) in c.iter_mut().zip(w) {
            *ci += sol[v] * wi;
        }
    }
    // Rescale so the recomputed witness is feasible.
    let m = others.iter().map(|&l| evaluate(fs, &c, l).abs()).fold(0.0f64, f64::max);
    if m > 1.0 {
        c.iter_mut().for_each(|x| *x /= m);
    }
    Ok((Some(sol.objective()), c))
}

/// Shilov boundary of `X`: quotient by non-separation, drop vanishing
/// points, then remove loose point classes one at a time.
pub fn boundary(fs: &FunctionSpace) -> Result<Boundary, FuncError> {
    let (classes, vanishing) = quotient(fs);
    let mut point_map = vec![None; fs.points];
    for (i, c) in classes.iter().enumerate() {
        for &l in c {
            point_map[l] = Some(i);
        }
    }
    let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let positive = positive_function(fs, &reps)?.ok_or(FuncError::ConeDoesNotSpan)?;
    let positive_witness = (0..fs.points).map(|l| evaluate(fs, &positive, l)).collect();

    let mut retained: Vec<usize> = (0..classes.len()).collect();
    let mut trace = Vec::new();
    let mut pass = 0;
    'passes: loop {
        let mut marginal = None;
        for pos in 0..retained.len() {
            let class = retained[pos];
            let others: Vec<usize> = retained.iter().filter(|&&c| c != class).map(|&c| reps[c]).collect();
            let (sup, c) = point_sup(fs, reps[class], &others)?;
            let loose = matches!(sup, Some(s) if s <= 1.0 + LOOSE_BAND.0);
            if let Some(s) = sup {
                if !loose && s < 1.0 + LOOSE_BAND.1 {
                    marginal.get_or_insert((class, s));
                }
            }
            trace.push(PointVerdict {
                pass,
                class,
                sup,
                witness: (0..fs.points).map(|l| evaluate(fs, &c, l)).collect(),
                removed: loose,
            });
            if loose {
                retained.remove(pos);
                pass += 1;
                continue 'passes;
            }
        }
        if let Some((class, sup)) = marginal {
            return Err(FuncError::Inconclusive { class, sup });
        }
        break;
    }
    Ok(Boundary { classes, vanishing, point_map, retained, trace, positive_witness })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub lp_boundary: Vec<Vec<usize>>,
    pub matrix_boundary: Vec<Vec<usize>>,
    pub all_blocks_size_one: bool,
    pub agree: bool,
}

/// Runs the diagonal embedding of `X` through the matrix envelope and
/// compares the retained blocks with the LP boundary.
pub fn crosscheck_diagonal(fs: &FunctionSpace, seed: u64) -> Result<CrossCheck, FuncError> {
    let b = boundary(fs)?;
    let (x, _) = validate_space(&fs.diagonal_generators()).map_err(EnvelopeError::from)?;
    let opts = EnvelopeOptions { seed, ..EnvelopeOptions::default() };
    let env = compute_envelope(&x, opts)?;
    let all_blocks_size_one = env.decomposition.block_sizes.iter().all(|&(k, _)| k == 1);
    let matrix: BTreeSet<Vec<usize>> = env
        .retained
        .iter()
        .map(|&i| {
            let p = env.decomposition.projections[i].as_cmatrix();
            (0..fs.points).filter(|&l| p[(l, l)].re > 0.5).collect()
        })
        .collect();
    let lp: BTreeSet<Vec<usize>> = b.boundary_points().into_iter().collect();
    Ok(CrossCheck {
        agree: lp == matrix && all_blocks_size_one,
        lp_boundary: lp.into_iter().collect(),
        matrix_boundary: matrix.into_iter().collect(),
        all_blocks_size_one,
    })
}
