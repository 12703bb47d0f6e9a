//! Complete contractivity of linear maps between block-diagonal matrix
//! spaces.
//!
//! The cb-norm of `ψ : W → M_s` (`W ⊂ ⊕_j M_{r_j}`) is the least `t` for
//! which the Paulsen map `[[λ, w],[v*, μ]] ↦ [[λ, ψ(w)],[ψ(v)*, μ]]·(1, t)`
//! has a CP extension with `Φ(1) = t·1`. Averaging over the diagonal torus
//! makes the extension bimodular, so its Choi matrix on each source block
//! lives on the `2·r_j·s` indices `(half, α, κ)` whose source and target
//! halves agree.

use rand::Rng;

use crate::matcore::random::{complex_gaussian, rng};
use crate::matcore::{
    amplify, herm_eig, herm_pinv_solve, hs_inner, op_norm, CMatrix, HermMatrix, LevelCoeffs, C64, ONE, ZERO,
};

use super::admm::{solve_monitored, SolveOptions};
use super::program::{AffineSet, ConicProgram};
use super::ConeError;

#[derive(Clone, Debug)]
pub struct LinearMapSpec {
    domain_basis: Vec<CMatrix>,
    images: Vec<CMatrix>,
    source_blocks: Vec<usize>,
    target_blocks: Vec<usize>,
    /// `domain_parts[j][t]`: block `j` of `domain_basis[t]`.
    domain_parts: Vec<Vec<CMatrix>>,
    image_parts: Vec<Vec<CMatrix>>,
    gram: HermMatrix,
    gram_condition: f64,
}

fn split_blocks(m: &CMatrix, sizes: &[usize]) -> Result<Vec<CMatrix>, ConeError> {
    let mut parts = Vec::with_capacity(sizes.len());
    let mut owner = Vec::with_capacity(m.rows());
    let mut off = 0;
    for (b, &r) in sizes.iter().enumerate() {
        parts.push(m.submatrix(off, off, r, r));
        owner.extend(std::iter::repeat_n(b, r));
        off += r;
    }
    let mut stray = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if owner[i] != owner[j] {
                stray += m[(i, j)].norm_sqr();
            }
        }
    }
    if stray.sqrt() > 1e-10 * m.fro_norm() {
        return Err(ConeError::BadProgram("matrix is not block diagonal for the declared blocks".into()));
    }
    Ok(parts)
}

impl LinearMapSpec {
    pub fn new(domain_basis: Vec<CMatrix>, images: Vec<CMatrix>) -> Result<Self, ConeError> {
        let p = domain_basis.first().map(|b| b.rows()).unwrap_or(0);
        let q = images.first().map(|b| b.rows()).unwrap_or(0);
        Self::with_blocks(domain_basis, images, vec![p], vec![q])
    }

    /// Declares that every domain element is block diagonal with
    /// `source_blocks` and every image with `target_blocks`.
    pub fn with_blocks(
        domain_basis: Vec<CMatrix>,
        images: Vec<CMatrix>,
        source_blocks: Vec<usize>,
        target_blocks: Vec<usize>,
    ) -> Result<Self, ConeError> {
        if domain_basis.is_empty() {
            return Err(ConeError::BadProgram("empty domain basis".into()));
        }
        if domain_basis.len() != images.len() {
            return Err(ConeError::BadProgram(format!(
                "{} domain elements but {} images",
                domain_basis.len(),
                images.len()
            )));
        }
        let p: usize = source_blocks.iter().sum();
        let q: usize = target_blocks.iter().sum();
        for b in &domain_basis {
            if b.shape() != (p, p) {
                return Err(ConeError::Mat(crate::matcore::MatError::ShapeMismatch {
                    expected: (p, p),
                    found: b.shape(),
                }));
            }
        }
        for b in &images {
            if b.shape() != (q, q) {
                return Err(ConeError::Mat(crate::matcore::MatError::ShapeMismatch {
                    expected: (q, q),
                    found: b.shape(),
                }));
            }
        }
        let d = domain_basis.len();
        let mut domain_parts = vec![Vec::with_capacity(d); source_blocks.len()];
        for b in &domain_basis {
            for (j, part) in split_blocks(b, &source_blocks)?.into_iter().enumerate() {
                domain_parts[j].push(part);
            }
        }
        let mut image_parts = vec![Vec::with_capacity(d); target_blocks.len()];
        for b in &images {
            for (l, part) in split_blocks(b, &target_blocks)?.into_iter().enumerate() {
                image_parts[l].push(part);
            }
        }
        let g = CMatrix::from_fn(d, d, |a, b| hs_inner(&domain_basis[b], &domain_basis[a]).expect("same shape"));
        let gram = HermMatrix::from_hermitian_part(&g);
        let e = herm_eig(&gram)?;
        let gram_condition = if e.min_value() <= 0.0 {
            f64::INFINITY
        } else {
            e.max_value() / e.min_value()
        };
        if gram_condition > 1e12 {
            return Err(ConeError::BadProgram(format!(
                "domain basis is numerically dependent (Gram condition {gram_condition:e})"
            )));
        }
        Ok(Self {
            domain_basis,
            images,
            source_blocks,
            target_blocks,
            domain_parts,
            image_parts,
            gram,
            gram_condition,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain_basis.len()
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    pub fn domain_basis(&self) -> &[CMatrix] {
        &self.domain_basis
    }

    pub fn images(&self) -> &[CMatrix] {
        &self.images
    }

    pub fn source_blocks(&self) -> &[usize] {
        &self.source_blocks
    }

    pub fn target_blocks(&self) -> &[usize] {
        &self.target_blocks
    }

    /// `ψ_k(y)` as a matrix.
    pub fn apply_level(&self, c: &LevelCoeffs) -> Result<CMatrix, ConeError> {
        Ok(amplify(c, &self.images)?)
    }

    /// `‖y‖` for `y ∈ M_k(W)`.
    pub fn domain_norm(&self, c: &LevelCoeffs) -> f64 {
        parts_norm(c, &self.domain_parts).0
    }

    /// `‖ψ_k(y)‖`.
    pub fn image_norm(&self, c: &LevelCoeffs) -> f64 {
        parts_norm(c, &self.image_parts).0
    }

    /// `‖ψ_k(y)‖ / ‖y‖` (zero for `y = 0`).
    pub fn ratio(&self, c: &LevelCoeffs) -> f64 {
        let n = self.domain_norm(c);
        if n == 0.0 {
            0.0
        } else {
            self.image_norm(c) / n
        }
    }

    fn restrict_target(&self, l: usize) -> LinearMapSpec {
        LinearMapSpec {
            domain_basis: self.domain_basis.clone(),
            images: self.image_parts[l].clone(),
            source_blocks: self.source_blocks.clone(),
            target_blocks: vec![self.target_blocks[l]],
            domain_parts: self.domain_parts.clone(),
            image_parts: vec![self.image_parts[l].clone()],
            gram: self.gram.clone(),
            gram_condition: self.gram_condition,
        }
    }

    /// Least-squares coordinates of a block-diagonal matrix given by its
    /// source parts.
    fn project_parts(&self, parts: &[CMatrix]) -> Vec<C64> {
        let h: Vec<C64> = (0..self.dim())
            .map(|b| {
                parts
                    .iter()
                    .zip(&self.domain_parts)
                    .map(|(z, w)| hs_inner(z, &w[b]).expect("same shape"))
                    .sum()
            })
            .collect();
        herm_pinv_solve(&self.gram, &h, 1e-13).expect("finite gram")
    }

    /// Projects a level-`k` element given by per-source-block matrices of
    /// size `k·r_j` onto `M_k(W)`.
    fn project_level(&self, k: usize, parts: &[CMatrix]) -> LevelCoeffs {
        let mut c = LevelCoeffs::zeros(k, self.dim());
        for i in 0..k {
            for j in 0..k {
                let entry: Vec<CMatrix> = parts
                    .iter()
                    .zip(&self.source_blocks)
                    .map(|(m, &r)| m.submatrix(i * r, j * r, r, r))
                    .collect();
                c.get_mut(i, j).copy_from_slice(&self.project_parts(&entry));
            }
        }
        c
    }
}

/// Largest operator norm over the parts, and the index attaining it.
fn parts_norm(c: &LevelCoeffs, parts: &[Vec<CMatrix>]) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (j, p) in parts.iter().enumerate() {
        let m = amplify(c, p).expect("consistent shapes");
        let v = op_norm(&m).expect("finite");
        if v > best.0 {
            best = (v, j);
        }
    }
    best
}

/// Top singular pair `(u, v)` with `M v = σ u`.
fn top_singular(m: &CMatrix) -> (Vec<C64>, Vec<C64>) {
    let g = HermMatrix::from_hermitian_part(&m.adjoint_mul(m));
    let e = herm_eig(&g).expect("finite");
    let v = e.vectors.col(0);
    let mut u = m.mul_vec(&v);
    let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nu > 0.0 {
        u.iter_mut().for_each(|z| *z /= nu);
    }
    (u, v)
}

/// Unitary polar factor `A (A*A)^{-1/2}` on the range of `A`.
fn polar(a: &CMatrix) -> CMatrix {
    let g = HermMatrix::from_hermitian_part(&a.adjoint_mul(a));
    let e = herm_eig(&g).expect("finite");
    let top = e.max_value().max(0.0);
    if top == 0.0 {
        return a.clone();
    }
    let inv = e.reconstruct_with(|x| if x > 1e-20 * top { 1.0 / x.sqrt() } else { 0.0 });
    a.matmul(&inv)
}

/// Ascent on `‖ψ_k(y)‖/‖y‖`: each step maximizes the linearization
/// `Re⟨ψ_k(y), u v*⟩` over (a projection of) the unit ball.
fn polish(map: &LinearMapSpec, mut c: LevelCoeffs, iters: usize) -> (LevelCoeffs, f64) {
    let k = c.k;
    let mut best = map.ratio(&c);
    for _ in 0..iters {
        let (_, l) = parts_norm(&c, &map.image_parts);
        let m = amplify(&c, &map.image_parts[l]).expect("shapes");
        let (u, v) = top_singular(&m);
        let s = map.target_blocks[l];
        let mut a = LevelCoeffs::zeros(k, map.dim());
        for i in 0..k {
            for j in 0..k {
                let gamma: Vec<C64> = (0..map.dim())
                    .map(|t| {
                        let img = &map.image_parts[l][t];
                        let mut acc = ZERO;
                        for x in 0..s {
                            for y in 0..s {
                                let zij = u[i * s + x] * v[j * s + y].conj();
                                acc += zij.conj() * img[(x, y)];
                            }
                        }
                        acc.conj()
                    })
                    .collect();
                let coef = herm_pinv_solve(&map.gram, &gamma, 1e-13).expect("finite");
                a.get_mut(i, j).copy_from_slice(&coef);
            }
        }
        let polars: Vec<CMatrix> = map
            .domain_parts
            .iter()
            .map(|p| polar(&amplify(&a, p).expect("shapes")))
            .collect();
        let next = map.project_level(k, &polars);
        let r = map.ratio(&next);
        if r > best * (1.0 + 1e-13) {
            best = r;
            c = next;
        } else {
            break;
        }
    }
    (c, best)
}

fn random_level(map: &LinearMapSpec, r: &mut impl Rng, k: usize, polar_type: bool) -> LevelCoeffs {
    let c = LevelCoeffs::from_fn(k, map.dim(), |_, _, _| complex_gaussian(r));
    if !polar_type {
        return c;
    }
    let polars: Vec<CMatrix> = map
        .domain_parts
        .iter()
        .map(|p| polar(&amplify(&c, p).expect("shapes")))
        .collect();
    map.project_level(k, &polars)
}

/// Best ratio found among random elements of `M_k(W)`, `k = 1..max_level`,
/// and the optional `extra` elements; deterministic in `seed`.
pub fn sampled_search(
    map: &LinearMapSpec,
    max_level: usize,
    samples: usize,
    seed: u64,
    extra: &[LevelCoeffs],
) -> (f64, Option<LevelCoeffs>) {
    let mut r = rng(seed);
    let max_level = max_level.max(1);
    let mut best = (0.0, None);
    for c in extra {
        let v = map.ratio(c);
        if v > best.0 {
            best = (v, Some(c.clone()));
        }
    }
    for i in 0..samples {
        let k = 1 + i % max_level;
        let c = random_level(map, &mut r, k, (i / max_level) % 2 == 1);
        let v = map.ratio(&c);
        if v > best.0 {
            best = (v, Some(c));
        }
    }
    best
}

/// Lower bound on `‖ψ‖_cb` from normalized random samples.
pub fn sampled_cb_lower_bound(map: &LinearMapSpec, max_level: usize, samples: usize, seed: u64) -> f64 {
    sampled_search(map, max_level, samples, seed, &[]).0
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Violation {
    pub level: usize,
    /// Normalized so that `‖y‖ = 1`.
    pub element: LevelCoeffs,
    /// `‖ψ_k(y)‖ > 1 + tol`.
    pub image_norm: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub enum CcVerdict {
    CompletelyContractive {
        /// Certified upper bound on the cb-norm.
        upper_bound: f64,
        /// Best sampled lower bound.
        sampled: f64,
        iterations: usize,
    },
    Not(Violation),
    Marginal {
        lower: f64,
        upper: f64,
        iterations: usize,
    },
}

impl CcVerdict {
    pub fn is_cc(&self) -> bool {
        matches!(self, CcVerdict::CompletelyContractive { .. })
    }
}

struct ChoiLayout {
    program: ConicProgram,
    /// Sizes `r_j` of the source blocks.
    r: Vec<usize>,
    s: usize,
}

/// Adds the functional `X ↦ Re(c·X_ij)` of a Hermitian block stored at
/// `off` in `svec` coordinates.
fn add_entry(row: &mut [f64], off: usize, n: usize, i: usize, j: usize, c: C64) {
    if i == j {
        row[off + i] += c.re;
        return;
    }
    let (a, b, sign) = if i < j { (i, j, -1.0) } else { (j, i, 1.0) };
    let pair = a * n - a * (a + 1) / 2 + (b - a - 1);
    let k = off + n + 2 * pair;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    row[k] += c.re * r;
    row[k + 1] += sign * c.im * r;
}

fn choi_program(map: &LinearMapSpec) -> ChoiLayout {
    let s = map.target_blocks[0];
    let r = map.source_blocks.clone();
    let mut blocks: Vec<usize> = r.iter().map(|&rj| 2 * rj * s).collect();
    blocks.push(1);
    let program = ConicProgram::feasibility(blocks, AffineSet::Equality { rows: vec![], rhs: vec![] });
    let offsets = program.offsets();
    let n = program.dim();
    let t_off = offsets[r.len()];
    let idx = |j: usize, a: usize, al: usize, ka: usize| a * r[j] * s + al * s + ka;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for half in 0..2 {
        for ka in 0..s {
            for la in ka..s {
                let parts: &[C64] = if ka == la { &[ONE] } else { &[ONE, C64::new(0.0, -1.0)] };
                for &phase in parts {
                    let mut row = vec![0.0; n];
                    for j in 0..r.len() {
                        for al in 0..r[j] {
                            add_entry(&mut row, offsets[j], blocks_dim(&r, s, j), idx(j, half, al, ka), idx(j, half, al, la), phase);
                        }
                    }
                    if ka == la {
                        row[t_off] -= 1.0;
                    }
                    rows.push(row);
                    rhs.push(0.0);
                }
            }
        }
    }
    for m in 0..map.dim() {
        let img = &map.image_parts[0][m];
        for ka in 0..s {
            for la in 0..s {
                for (phase, target) in [(ONE, img[(ka, la)].re), (C64::new(0.0, -1.0), img[(ka, la)].im)] {
                    let mut row = vec![0.0; n];
                    for j in 0..r.len() {
                        let w = &map.domain_parts[j][m];
                        for al in 0..r[j] {
                            for be in 0..r[j] {
                                let wab = w[(al, be)];
                                if wab == ZERO {
                                    continue;
                                }
                                add_entry(&mut row, offsets[j], blocks_dim(&r, s, j), idx(j, 0, al, ka), idx(j, 1, be, la), phase * wab);
                            }
                        }
                    }
                    rows.push(row);
                    rhs.push(target);
                }
            }
        }
    }
    let mut objective = vec![0.0; n];
    objective[t_off] = 1.0;
    ChoiLayout {
        program: ConicProgram {
            affine: AffineSet::Equality { rows, rhs },
            objective: Some(objective),
            ..program
        },
        r,
        s,
    }
}

fn blocks_dim(r: &[usize], s: usize, j: usize) -> usize {
    2 * r[j] * s
}

/// Certified cb-norm upper bound at an affine point: shifting each Choi
/// block by its negative part keeps the off-diagonal constraints and
/// raises the trace constraints by `Σ_j r_j·shift_j`.
fn certified_upper(layout: &ChoiLayout, x: &[f64]) -> f64 {
    let blocks = layout.program.unstack(x);
    let t = blocks[layout.r.len()].as_cmatrix()[(0, 0)].re;
    let mut ub = t;
    for (j, b) in blocks.iter().take(layout.r.len()).enumerate() {
        let e = herm_eig(b).expect("finite");
        ub += layout.r[j] as f64 * (-e.min_value()).max(0.0);
    }
    ub
}

/// Level-`s` candidates read off the dual slack of the Choi program.
fn dual_candidates(map: &LinearMapSpec, layout: &ChoiLayout, slack: &[HermMatrix]) -> Vec<LevelCoeffs> {
    let s = layout.s;
    let r = &layout.r;
    let mut raw: Vec<CMatrix> = Vec::new();
    let mut sig1 = CMatrix::zeros(s, s);
    let mut sig2 = CMatrix::zeros(s, s);
    let total: usize = r.iter().sum();
    for (j, &rj) in r.iter().enumerate() {
        let m = slack[j].as_cmatrix();
        let off = rj * s;
        // Reorder (α, κ) to (κ, α).
        let y = CMatrix::from_fn(s * rj, s * rj, |p, q| {
            let (ka, al) = (p / rj, p % rj);
            let (la, be) = (q / rj, q % rj);
            m[(al * s + ka, off + be * s + la)]
        });
        raw.push(y);
        for al in 0..rj {
            for ka in 0..s {
                for la in 0..s {
                    sig1[(ka, la)] += m[(al * s + ka, al * s + la)] / total as f64;
                    sig2[(ka, la)] += m[(off + al * s + ka, off + al * s + la)] / total as f64;
                }
            }
        }
    }
    let inv_sqrt = |m: &CMatrix| {
        let h = HermMatrix::from_hermitian_part(m);
        let e = herm_eig(&h).expect("finite");
        let eta = 1e-9 * e.max_value().abs().max(1e-300);
        e.reconstruct_with(|x| 1.0 / (x.max(0.0) + eta).sqrt())
    };
    let n1 = inv_sqrt(&sig1);
    let n2 = inv_sqrt(&sig2);
    let mut out = Vec::new();
    for variant in 0..4 {
        let parts: Vec<CMatrix> = raw
            .iter()
            .map(|y| match variant {
                0 => y.clone(),
                1 => y.conj(),
                2 => y.transpose(),
                _ => y.adjoint(),
            })
            .collect();
        let c = map.project_level(s, &parts);
        let mut scaled = LevelCoeffs::zeros(s, map.dim());
        for i in 0..s {
            for j in 0..s {
                for a in 0..s {
                    for b in 0..s {
                        let f = n1[(i, a)] * n2[(b, j)];
                        if f == ZERO {
                            continue;
                        }
                        let src = c.get(a, b).to_vec();
                        for (dst, v) in scaled.get_mut(i, j).iter_mut().zip(src) {
                            *dst += f * v;
                        }
                    }
                }
            }
        }
        out.push(c);
        out.push(scaled);
    }
    out
}

fn normalized_violation(map: &LinearMapSpec, mut c: LevelCoeffs) -> Violation {
    let n = map.domain_norm(&c);
    c.scale(1.0 / n);
    Violation {
        level: c.k,
        image_norm: map.image_norm(&c),
        element: c,
    }
}

const QUICK_SAMPLES: usize = 64;
const POLISH_ITERS: usize = 60;

/// Searches for a violation by sampling plus ascent from the best starts.
fn search_violation(map: &LinearMapSpec, seed: u64, extra: &[LevelCoeffs], samples: usize) -> (f64, Option<LevelCoeffs>) {
    let s = map.target_blocks.iter().copied().max().unwrap_or(1);
    let mut r = rng(seed);
    let mut starts: Vec<(f64, LevelCoeffs)> = extra.iter().map(|c| (map.ratio(c), c.clone())).collect();
    for i in 0..samples {
        let k = 1 + i % s;
        let c = random_level(map, &mut r, k, (i / s) % 2 == 1);
        starts.push((map.ratio(&c), c));
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: (f64, Option<LevelCoeffs>) = (0.0, None);
    for (_, c) in starts.into_iter().take(6) {
        let (c2, v) = polish(map, c, POLISH_ITERS);
        if v > best.0 {
            best = (v, Some(c2));
        }
    }
    best
}

/// Decides whether `map` is completely contractive at tolerance `tol`.
pub fn cc_test(map: &LinearMapSpec, tol: f64) -> Result<CcVerdict, ConeError> {
    cc_test_seeded(map, tol, 0x5eed)
}

pub fn cc_test_seeded(map: &LinearMapSpec, tol: f64, seed: u64) -> Result<CcVerdict, ConeError> {
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    let mut sampled: f64 = 0.0;
    let mut iterations = 0;
    for l in 0..map.target_blocks.len() {
        let part = map.restrict_target(l);
        if part.image_parts[0].iter().all(|m| m.max_abs() == 0.0) {
            continue;
        }
        let (q, qc) = search_violation(&part, seed ^ (l as u64), &[], QUICK_SAMPLES);
        if q > 1.0 + tol {
            return Ok(CcVerdict::Not(normalized_violation(map, qc.expect("sample"))));
        }
        sampled = sampled.max(q);
        let layout = choi_program(&part);
        let mut best_ub = f64::INFINITY;
        let opts = SolveOptions {
            tol: (tol * 0.1).max(1e-11),
            ..SolveOptions::default()
        };
        let out = solve_monitored(&layout.program, &opts, &mut |x| {
            let ub = certified_upper(&layout, x);
            best_ub = best_ub.min(ub);
            best_ub <= 1.0 + 0.5 * tol
        })?;
        iterations += out.iterations;
        if let Some(pt) = &out.point {
            best_ub = best_ub.min(certified_upper(&layout, &ConicProgram::stack(pt)));
        }
        if best_ub <= 1.0 + tol {
            upper = upper.max(best_ub);
            continue;
        }
        let extra = out
            .dual_slack
            .as_ref()
            .map(|sl| dual_candidates(&part, &layout, sl))
            .unwrap_or_default();
        let (v, vc) = search_violation(&part, seed.wrapping_add(17 + l as u64), &extra, 4 * QUICK_SAMPLES);
        if v > 1.0 + tol {
            return Ok(CcVerdict::Not(normalized_violation(map, vc.expect("candidate"))));
        }
        lower = lower.max(v);
        upper = upper.max(best_ub);
        return Ok(CcVerdict::Marginal {
            lower: lower.max(sampled),
            upper,
            iterations,
        });
    }
    let confirm = sampled_cb_lower_bound(map, map.target_blocks.iter().copied().max().unwrap_or(1), 200, seed ^ 0xc0ff);
    sampled = sampled.max(confirm);
    if sampled > 1.0 + 10.0 * tol {
        return Ok(CcVerdict::Marginal {
            lower: sampled,
            upper,
            iterations,
        });
    }
    Ok(CcVerdict::CompletelyContractive {
        upper_bound: upper,
        sampled,
        iterations,
    })
}

/// Sampled lower and certified upper bounds on `‖ψ‖_cb`.
pub fn cb_norm_bound(map: &LinearMapSpec, tol: f64) -> Result<(f64, f64), ConeError> {
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 0.0;
    for l in 0..map.target_blocks.len() {
        let part = map.restrict_target(l);
        let layout = choi_program(&part);
        let opts = SolveOptions {
            tol,
            ..SolveOptions::default()
        };
        let mut best_ub = f64::INFINITY;
        let out = solve_monitored(&layout.program, &opts, &mut |x| {
            best_ub = best_ub.min(certified_upper(&layout, x));
            false
        })?;
        let extra = out
            .dual_slack
            .as_ref()
            .map(|sl| dual_candidates(&part, &layout, sl))
            .unwrap_or_default();
        let (v, _) = search_violation(&part, 99 + l as u64, &extra, 4 * QUICK_SAMPLES);
        lower = lower.max(v);
        upper = upper.max(best_ub);
    }
    Ok((lower, upper))
}
