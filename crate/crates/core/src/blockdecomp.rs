//! Wedderburn structure of a finite-dimensional *-algebra `B ⊂ M_n`.
//!
//! Central projections come from the spectrum of a random central element;
//! the multiplicity of each block from the spectrum of a random element of
//! its commutant. Every randomized split is re-sampled and checked.

use thiserror::Error;

use crate::matcore::random::{complex_gaussian, gaussian, rng};
use crate::matcore::span::{null_space_scaled, range_basis, RankOptions};
use crate::matcore::{herm_eig, CMatrix, HermMatrix, MatError, C64};
use crate::stargen::{AlgebraPresentation, StarError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("random sample failed to separate blocks after {attempts} attempts")]
    DegenerateSample { attempts: usize },
    #[error("compressed block of dimension {dim} is not a full matrix algebra")]
    NotAFactor { dim: usize },
    #[error("projection is not one of the minimal central projections")]
    UnknownProjection,
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Star(#[from] StarError),
}

const MAX_ATTEMPTS: usize = 6;
const GROUP_GAP: f64 = 1e-6;
const VERIFY_TOL: f64 = 1e-8;
const ISO_TOL: f64 = 1e-7;

/// `B ≅ ⊕_i M_{k_i}` with block `i` acting with multiplicity `m_i`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub projections: Vec<HermMatrix>,
    /// `(k_i, m_i)`.
    pub block_sizes: Vec<(usize, usize)>,
    /// Isometries `n × k_i m_i` with `V* x V = 1_{m_i} ⊗ A_i(x)` for `x ∈ B`
    /// (copies arranged along the diagonal).
    pub iso_data: Vec<CMatrix>,
}

impl BlockDecomposition {
    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn rank(&self, i: usize) -> usize {
        let (k, m) = self.block_sizes[i];
        k * m
    }

    /// The `k_i × k_i` matrix representing `x` in block `i`.
    pub fn abstract_block(&self, i: usize, x: &CMatrix) -> CMatrix {
        let k = self.block_sizes[i].0;
        let v = self.iso_data[i].submatrix(0, 0, self.iso_data[i].rows(), k);
        x.compress(&v)
    }

    /// Direct sum of the abstract blocks of `x` listed in `blocks`.
    pub fn reduce(&self, x: &CMatrix, blocks: &[usize]) -> CMatrix {
        let parts: Vec<CMatrix> = blocks.iter().map(|&i| self.abstract_block(i, x)).collect();
        CMatrix::direct_sum(&parts)
    }

    pub fn abstract_sizes(&self, blocks: &[usize]) -> Vec<usize> {
        blocks.iter().map(|&i| self.block_sizes[i].0).collect()
    }

    /// Largest deviation of a basis element from the declared structure
    /// after conjugation by the isometries.
    pub fn structure_defect(&self, alg: &AlgebraPresentation) -> f64 {
        let mut worst: f64 = 0.0;
        for b in alg.basis() {
            let x = b.as_cmatrix();
            let mut rebuilt = CMatrix::zeros(x.rows(), x.cols());
            for i in 0..self.len() {
                let v = &self.iso_data[i];
                let a = self.abstract_block(i, x);
                let copies = CMatrix::identity(self.block_sizes[i].1).kron(&a);
                rebuilt = &rebuilt + &(&(v * &copies) * &v.adjoint());
            }
            worst = worst.max(rebuilt.dist(x));
        }
        worst
    }
}

/// Real coefficient vectors `c` (orthonormal) such that `Σ c_i h_i`
/// commutes with every element of `with`.
fn commuting_combinations(h: &[HermMatrix], with: &[CMatrix]) -> Result<Vec<Vec<f64>>, MatError> {
    let n = h.first().map(|x| x.dim()).unwrap_or(0);
    let len = 2 * n * n;
    let d = h.len();
    let mut rows = vec![vec![0.0; d]; with.len() * len];
    for (j, w) in with.iter().enumerate() {
        for (i, hi) in h.iter().enumerate() {
            let m = hi.as_cmatrix();
            let c = &m.matmul(w) - &w.matmul(m);
            for (r, v) in c.to_real_vec().into_iter().enumerate() {
                rows[j * len + r][i] = v;
            }
        }
    }
    rows.retain(|r| r.iter().any(|&x| x != 0.0));
    let scale = with.iter().map(|w| w.fro_norm()).fold(0.0, f64::max);
    null_space_scaled(rows, d, scale, RankOptions::default())
}

fn combine(h: &[HermMatrix], c: &[f64]) -> HermMatrix {
    let n = h[0].dim();
    let mut m = CMatrix::zeros(n, n);
    for (hi, &ci) in h.iter().zip(c) {
        m.axpy(C64::new(ci, 0.0), hi.as_cmatrix());
    }
    HermMatrix::from_hermitian_part(&m)
}

/// Orthonormal Hermitian basis of the center of `alg`.
pub fn center(alg: &AlgebraPresentation) -> Result<Vec<HermMatrix>, DecompError> {
    let basis = alg.basis();
    let with: Vec<CMatrix> = basis.iter().map(|b| b.as_cmatrix().clone()).collect();
    let sols = commuting_combinations(basis, &with)?;
    Ok(sols.iter().map(|c| combine(basis, c)).collect())
}

/// Splits descending eigenvalues into clusters separated by more than
/// `GROUP_GAP` relative to the spectral scale.
fn group_eigenvalues(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let gap = GROUP_GAP * scale.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i - 1] - values[i] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Minimum separation between clusters relative to the scale; used to
/// reject samples where distinct blocks nearly collide.
fn separation(values: &[f64], groups: &[std::ops::Range<usize>]) -> f64 {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    groups
        .windows(2)
        .map(|w| (values[w[0].end - 1] - values[w[1].start]) / scale)
        .fold(f64::INFINITY, f64::min)
}

fn random_combination(h: &[HermMatrix], seed: u64) -> HermMatrix {
    let mut r = rng(seed);
    let c: Vec<f64> = h.iter().map(|_| gaussian(&mut r)).collect();
    combine(h, &c)
}

fn unit_range(alg: &AlgebraPresentation) -> Result<CMatrix, DecompError> {
    let e = herm_eig(alg.unit())?;
    Ok(range_basis(&e, 0.5))
}

fn split_by_central(z: &HermMatrix, v: &CMatrix, expected: usize) -> Result<Option<Vec<HermMatrix>>, DecompError> {
    let zc = HermMatrix::from_hermitian_part(&z.as_cmatrix().compress(v));
    let e = herm_eig(&zc)?;
    let groups = group_eigenvalues(&e.values);
    if groups.len() != expected || separation(&e.values, &groups) < 1e-4 {
        return Ok(None);
    }
    let projections = groups
        .iter()
        .map(|g| {
            let idx: Vec<usize> = g.clone().collect();
            let w = v * &e.vectors.select_cols(&idx);
            HermMatrix::from_hermitian_part(&w.matmul(&w.adjoint()))
        })
        .collect();
    Ok(Some(projections))
}

fn same_partition(a: &[HermMatrix], b: &[HermMatrix]) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| {
            b.iter()
                .any(|q| p.as_cmatrix().dist(q.as_cmatrix()) <= ISO_TOL)
        })
}

fn sort_key(p: &HermMatrix) -> (i64, f64) {
    let m = p.as_cmatrix();
    let n = m.rows();
    let rank = m.trace().re.round() as i64;
    let weight: f64 = (0..n).map(|i| i as f64 * m[(i, i)].re).sum::<f64>() / rank.max(1) as f64;
    (-rank, weight)
}

fn verify_projections(alg: &AlgebraPresentation, ps: &[HermMatrix]) -> bool {
    let n = alg.ambient_dim();
    let mut sum = CMatrix::zeros(n, n);
    for p in ps {
        let m = p.as_cmatrix();
        if m.matmul(m).dist(m) > VERIFY_TOL {
            return false;
        }
        for b in alg.basis() {
            let bm = b.as_cmatrix();
            if m.matmul(bm).dist(&bm.matmul(m)) > VERIFY_TOL {
                return false;
            }
        }
        sum = &sum + m;
    }
    sum.dist(alg.unit().as_cmatrix()) <= VERIFY_TOL
}

/// The identities of the blocks of `alg`, sorted by descending rank.
pub fn minimal_central_projections(alg: &AlgebraPresentation, seed: u64) -> Result<Vec<HermMatrix>, DecompError> {
    let z = center(alg)?;
    if z.is_empty() {
        return Err(StarError::ZeroSpace.into());
    }
    let v = unit_range(alg)?;
    let mut misses = 0;
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(2 * attempt);
        let first = split_by_central(&random_combination(&z, s), &v, z.len())?;
        let second = split_by_central(&random_combination(&z, s ^ 0x51_7cc1_b727_220a), &v, z.len())?;
        match (first, second) {
            (Some(mut a), Some(b)) if same_partition(&a, &b) && verify_projections(alg, &a) => {
                a.sort_by(|x, y| {
                    let (r1, w1) = sort_key(x);
                    let (r2, w2) = sort_key(y);
                    r1.cmp(&r2).then(w1.total_cmp(&w2))
                });
                return Ok(a);
            }
            _ => misses += 1,
        }
    }
    Err(DecompError::DegenerateSample { attempts: misses })
}

/// Standard Hermitian basis of `M_r` (unit `svec` coordinates).
fn hermitian_units(r: usize) -> Vec<HermMatrix> {
    let len = HermMatrix::svec_len(r);
    (0..len)
        .map(|i| {
            let mut e = vec![0.0; len];
            e[i] = 1.0;
            HermMatrix::from_svec(r, &e)
        })
        .collect()
}

fn isometry_for_copies(a: &[CMatrix], k: usize, m: usize, seed: u64) -> Result<Option<CMatrix>, DecompError> {
    let r = k * m;
    let units = hermitian_units(r);
    let comm = commuting_combinations(&units, a)?;
    if comm.len() != m * m {
        return Err(DecompError::NotAFactor { dim: k * k });
    }
    let comm: Vec<HermMatrix> = comm.iter().map(|c| combine(&units, c)).collect();
    let y = random_combination(&comm, seed);
    let e = herm_eig(&y)?;
    let groups = group_eigenvalues(&e.values);
    if groups.len() != m || groups.iter().any(|g| g.len() != k) || separation(&e.values, &groups) < 1e-4 {
        return Ok(None);
    }
    let mut rg = rng(seed ^ 0xabcd);
    let mut g = CMatrix::zeros(r, r);
    for c in &comm {
        g.axpy(complex_gaussian(&mut rg), c.as_cmatrix());
    }
    let w: Vec<CMatrix> = groups
        .iter()
        .map(|gr| e.vectors.select_cols(&gr.clone().collect::<Vec<_>>()))
        .collect();
    let gnorm = g.fro_norm();
    let mut cols = vec![w[0].clone()];
    for ws in &w[1..] {
        let t = w[0].adjoint_mul(&g.matmul(ws));
        let tt = t.matmul(&t.adjoint());
        let sigma2 = tt.trace().re / k as f64;
        if sigma2.sqrt() < 1e-3 * gnorm / (m as f64) {
            return Ok(None);
        }
        if tt.dist(&CMatrix::identity(k).scale_re(sigma2)) > 1e-8 * sigma2 {
            return Ok(None);
        }
        let u = t.scale_re(1.0 / sigma2.sqrt());
        cols.push(ws.matmul(&u.adjoint()));
    }
    Ok(Some(CMatrix::hstack(&cols)))
}

fn copies_defect(q: &CMatrix, a: &CMatrix, k: usize, m: usize) -> f64 {
    let c = a.compress(q);
    let block = c.submatrix(0, 0, k, k);
    c.dist(&CMatrix::identity(m).kron(&block)) / a.fro_norm().max(1.0)
}

/// Block size `k`, multiplicity `m` and an isometry `V : C^{km} → range(p)`
/// with `V* x V = 1_m ⊗ A(x)` for `x ∈ B`.
pub fn strip_multiplicity(
    alg: &AlgebraPresentation,
    p: &HermMatrix,
    seed: u64,
) -> Result<(usize, usize, CMatrix), DecompError> {
    let v = range_basis(&herm_eig(p)?, 0.5);
    let r = v.cols();
    let compressed: Vec<HermMatrix> = alg
        .basis()
        .iter()
        .map(|b| HermMatrix::from_hermitian_part(&b.as_cmatrix().compress(&v)))
        .collect();
    let span = crate::stargen::herm_span(&compressed, RankOptions::default())?;
    let dim = span.len();
    let k = (dim as f64).sqrt().round() as usize;
    if k == 0 || k * k != dim || r % k != 0 {
        return Err(DecompError::NotAFactor { dim });
    }
    let m = r / k;
    if m == 1 {
        return Ok((k, 1, v));
    }
    let a: Vec<CMatrix> = span.iter().map(|s| s.as_cmatrix().clone()).collect();
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let s = seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(attempt);
        if let Some(q) = isometry_for_copies(&a, k, m, s)? {
            if a.iter().all(|x| copies_defect(&q, x, k, m) <= ISO_TOL) {
                return Ok((k, m, &v * &q));
            }
        }
    }
    Err(DecompError::DegenerateSample { attempts: MAX_ATTEMPTS })
}

/// Full decomposition: projections, block sizes and isometries.
pub fn decompose(alg: &AlgebraPresentation, seed: u64) -> Result<BlockDecomposition, DecompError> {
    let projections = minimal_central_projections(alg, seed)?;
    let mut block_sizes = Vec::with_capacity(projections.len());
    let mut iso_data = Vec::with_capacity(projections.len());
    for (i, p) in projections.iter().enumerate() {
        let (k, m, v) = strip_multiplicity(alg, p, seed.wrapping_add(1 + i as u64))?;
        block_sizes.push((k, m));
        iso_data.push(v);
    }
    Ok(BlockDecomposition {
        projections,
        block_sizes,
        iso_data,
    })
}

/// Index of the minimal central projection closest to `p`.
pub fn locate_block(d: &BlockDecomposition, p: &HermMatrix) -> Result<usize, DecompError> {
    d.projections
        .iter()
        .position(|q| q.as_cmatrix().dist(p.as_cmatrix()) <= ISO_TOL)
        .ok_or(DecompError::UnknownProjection)
}

/// Matches two lists of projections by trace pairing; returns the
/// permutation and the worst residual.
pub fn match_projections(a: &[HermMatrix], b: &[HermMatrix]) -> Option<(Vec<usize>, f64)> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut perm = Vec::with_capacity(a.len());
    let mut worst: f64 = 0.0;
    for p in a {
        let (j, _) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, q)| {
                let t = p.as_cmatrix().matmul(q.as_cmatrix()).trace().re;
                (j, t)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        used[j] = true;
        worst = worst.max(p.as_cmatrix().dist(b[j].as_cmatrix()));
        perm.push(j);
    }
    Some((perm, worst))
}
