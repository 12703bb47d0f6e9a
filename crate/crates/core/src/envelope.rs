//! The C*-envelope of a selfadjoint matrix space with spanning cone.
//!
//! Starting from the generated *-algebra `B = ⊕ M_{k_i}`, blocks whose
//! removal keeps every matrix norm of `X` are dropped one at a time. A
//! block `p` is loose for the retained set `R` when `x ↦ x(q_R − p)` is
//! injective on `X` and its inverse `x(q_R − p) ↦ xp` is completely
//! contractive, since `‖x q_R‖ = max(‖x(q_R − p)‖, ‖xp‖)` at every level.
//! All tests run on the abstract blocks, where multiplicities are gone.

use serde::Serialize;
use thiserror::Error;

use crate::blockdecomp::{decompose, locate_block, BlockDecomposition, DecompError};
use crate::conesolver::{cc_test_seeded, CcVerdict, ConeError, LinearMapSpec, Violation};
use crate::matcore::random::{complex_gaussian, rng};
use crate::matcore::span::{null_space_scaled, RankOptions};
use crate::matcore::{amplify, herm_eig, op_norm, CMatrix, HermMatrix, LevelCoeffs, MatError, C64, I};
use crate::stargen::{cone_spans, generate_star_algebra, validate_space, AlgebraPresentation, ConeSpan, MatrixSpace, StarError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("positive cone spans only {span_dim} of {dim} dimensions")]
    ConeDoesNotSpan { span_dim: usize, dim: usize },
    #[error("looseness of block {block} is inconclusive at tolerance (bounds {lower:.9}, {upper:.9})")]
    InconclusiveAtTolerance { block: usize, lower: f64, upper: f64 },
    #[error("correspondence is not a complete isometry onto the second space (defect {defect:e})")]
    BadCorrespondence { defect: f64 },
    #[error("intertwiner system is numerically ambiguous ({solutions} real solutions)")]
    NumericallyAmbiguous { solutions: usize },
    #[error(transparent)]
    Star(#[from] StarError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
pub enum ScanOrder {
    #[default]
    DescendingRank,
    AscendingRank,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeOptions {
    pub tol: f64,
    pub seed: u64,
    pub scan: ScanOrder,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            seed: 0,
            scan: ScanOrder::DescendingRank,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum Essential {
    /// Real coordinates of a nonzero `x ∈ X` killed by the compression.
    Kernel { coords: Vec<f64> },
    /// An element whose norm drops when the block is removed.
    NormDrop(Violation),
}

#[derive(Clone, Debug, Serialize)]
pub enum Looseness {
    Loose { certificate: CcVerdict },
    Essential(Essential),
    Marginal { lower: f64, upper: f64 },
}

impl Looseness {
    pub fn is_loose(&self) -> bool {
        matches!(self, Looseness::Loose { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub pass: usize,
    pub block: usize,
    /// `(k, m)` of the block.
    pub size: (usize, usize),
    pub verdict: Looseness,
    pub removed: bool,
}

#[derive(Clone, Debug)]
pub struct EnvelopePresentation {
    pub source: MatrixSpace,
    pub algebra: AlgebraPresentation,
    pub decomposition: BlockDecomposition,
    /// Indices into `decomposition` of the surviving blocks.
    pub retained: Vec<usize>,
    pub q: HermMatrix,
    /// `x q` for the basis of `source`.
    pub embedded_basis: Vec<CMatrix>,
    pub elimination_trace: Vec<TraceEntry>,
    /// Sizes `k_i` of the retained blocks, descending.
    pub abstract_blocks: Vec<usize>,
    pub options: EnvelopeOptions,
}

impl EnvelopePresentation {
    pub fn removed(&self) -> Vec<usize> {
        (0..self.decomposition.len())
            .filter(|i| !self.retained.contains(i))
            .collect()
    }

    pub fn embed(&self, x: &CMatrix) -> CMatrix {
        x.matmul(self.q.as_cmatrix())
    }

    /// `⊕_{i ∈ retained} A_i(x)`.
    pub fn reduce(&self, x: &CMatrix) -> CMatrix {
        self.decomposition.reduce(x, &self.retained)
    }

    /// The image `j(X)` as a space in the same ambient algebra.
    pub fn embedded_space(&self) -> Result<MatrixSpace, EnvelopeError> {
        Ok(validate_space(&self.embedded_basis)?.0)
    }
}

fn ambiguous(e: &MatError) -> bool {
    matches!(e, MatError::RankAmbiguous { .. })
}

/// Looseness of block `p` relative to the retained blocks `retained`
/// (which contain `p`).
fn looseness_in(
    x: &MatrixSpace,
    d: &BlockDecomposition,
    retained: &[usize],
    p: usize,
    tol: f64,
    seed: u64,
) -> Result<Looseness, EnvelopeError> {
    let rest: Vec<usize> = retained.iter().copied().filter(|&i| i != p).collect();
    let dim = x.dim();
    if rest.is_empty() {
        let mut coords = vec![0.0; dim];
        coords[0] = 1.0;
        return Ok(Looseness::Essential(Essential::Kernel { coords }));
    }
    let domain: Vec<CMatrix> = x.basis().iter().map(|b| d.reduce(b.as_cmatrix(), &rest)).collect();
    let vecs: Vec<Vec<f64>> = domain
        .iter()
        .map(|m| HermMatrix::from_hermitian_part(m).to_svec())
        .collect();
    let len = vecs[0].len();
    let rows: Vec<Vec<f64>> = (0..len).map(|r| vecs.iter().map(|v| v[r]).collect()).collect();
    match null_space_scaled(rows, dim, 1.0, RankOptions::default()) {
        Ok(ker) if !ker.is_empty() => {
            return Ok(Looseness::Essential(Essential::Kernel { coords: ker[0].clone() }));
        }
        Ok(_) => {}
        Err(e) if ambiguous(&e) => return Ok(Looseness::Marginal { lower: 0.0, upper: f64::INFINITY }),
        Err(e) => return Err(e.into()),
    }
    let images: Vec<CMatrix> = x.basis().iter().map(|b| d.abstract_block(p, b.as_cmatrix())).collect();
    let map = LinearMapSpec::with_blocks(domain, images, d.abstract_sizes(&rest), vec![d.block_sizes[p].0])?;
    Ok(match cc_test_seeded(&map, tol, seed)? {
        c @ CcVerdict::CompletelyContractive { .. } => Looseness::Loose { certificate: c },
        CcVerdict::Not(v) => Looseness::Essential(Essential::NormDrop(v)),
        CcVerdict::Marginal { lower, upper, .. } => Looseness::Marginal { lower, upper },
    })
}

/// Whether the block with minimal central projection `p` can be removed
/// from the whole algebra without changing any matrix norm on `x`.
pub fn is_block_loose(
    x: &MatrixSpace,
    alg: &AlgebraPresentation,
    p: &HermMatrix,
    tol: f64,
) -> Result<Looseness, EnvelopeError> {
    let d = decompose(alg, 0)?;
    let idx = locate_block(&d, p)?;
    let all: Vec<usize> = (0..d.len()).collect();
    looseness_in(x, &d, &all, idx, tol, 0x100)
}

fn scan_order(d: &BlockDecomposition, retained: &[usize], order: ScanOrder) -> Vec<usize> {
    let mut v = retained.to_vec();
    match order {
        ScanOrder::DescendingRank => v.sort_by_key(|&i| (std::cmp::Reverse(d.rank(i)), i)),
        ScanOrder::AscendingRank => v.sort_by_key(|&i| (d.rank(i), std::cmp::Reverse(i))),
    }
    v
}

pub fn compute_envelope(x: &MatrixSpace, opts: EnvelopeOptions) -> Result<EnvelopePresentation, EnvelopeError> {
    if let ConeSpan::DoesNotSpan { span_dim } = cone_spans(x)? {
        return Err(EnvelopeError::ConeDoesNotSpan { span_dim, dim: x.dim() });
    }
    let algebra = generate_star_algebra(x)?;
    let decomposition = decompose(&algebra, opts.seed)?;
    let mut retained: Vec<usize> = (0..decomposition.len()).collect();
    let mut trace = Vec::new();
    let mut pass = 0;
    loop {
        let mut marginal: Option<(usize, f64, f64)> = None;
        let mut removed = None;
        for p in scan_order(&decomposition, &retained, opts.scan) {
            let seed = opts.seed ^ ((pass as u64) << 32) ^ p as u64;
            let verdict = looseness_in(x, &decomposition, &retained, p, opts.tol, seed)?;
            let loose = verdict.is_loose();
            if let Looseness::Marginal { lower, upper } = verdict {
                marginal.get_or_insert((p, lower, upper));
            }
            trace.push(TraceEntry {
                pass,
                block: p,
                size: decomposition.block_sizes[p],
                verdict,
                removed: loose,
            });
            if loose {
                removed = Some(p);
                break;
            }
        }
        match removed {
            Some(p) => retained.retain(|&i| i != p),
            None => {
                if let Some((block, lower, upper)) = marginal {
                    return Err(EnvelopeError::InconclusiveAtTolerance { block, lower, upper });
                }
                break;
            }
        }
        pass += 1;
    }
    let n = x.ambient_dim();
    let mut q = CMatrix::zeros(n, n);
    for &i in &retained {
        q = &q + decomposition.projections[i].as_cmatrix();
    }
    let q = HermMatrix::from_hermitian_part(&q);
    let embedded_basis = x.basis().iter().map(|b| b.as_cmatrix().matmul(q.as_cmatrix())).collect();
    let mut abstract_blocks = decomposition.abstract_sizes(&retained);
    abstract_blocks.sort_by(|a, b| b.cmp(a));
    Ok(EnvelopePresentation {
        source: x.clone(),
        algebra,
        decomposition,
        retained,
        q,
        embedded_basis,
        elimination_trace: trace,
        abstract_blocks,
        options: opts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingCertificate {
    /// Largest relative norm discrepancy per level `1..=levels`.
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
    /// Complete contractivity of `xq ↦ x`; absent when nothing was removed.
    pub inverse: Option<CcVerdict>,
    pub passed: bool,
}

fn random_coeffs(r: &mut impl rand::Rng, k: usize, dim: usize) -> LevelCoeffs {
    LevelCoeffs::from_fn(k, dim, |_, _, _| complex_gaussian(r))
}

/// Sampled comparison of `‖x‖` and `‖x(1_k ⊗ q)‖` on `M_k(X)`, plus the
/// complete-contractivity certificate of the inverse of the embedding.
pub fn certify_embedding(
    env: &EnvelopePresentation,
    levels: usize,
    samples: usize,
    seed: u64,
) -> Result<EmbeddingCertificate, EnvelopeError> {
    let basis = env.source.basis_matrices();
    let mut r = rng(seed);
    let mut discrepancy = Vec::with_capacity(levels);
    for k in 1..=levels {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let c = random_coeffs(&mut r, k, basis.len());
            let a = op_norm(&amplify(&c, &basis)?)?;
            let b = op_norm(&amplify(&c, &env.embedded_basis)?)?;
            if a > 0.0 {
                worst = worst.max((a - b).abs() / a);
            }
        }
        discrepancy.push(worst);
    }
    let removed = env.removed();
    let inverse = if removed.is_empty() {
        None
    } else {
        let d = &env.decomposition;
        let domain: Vec<CMatrix> = basis.iter().map(|b| d.reduce(b, &env.retained)).collect();
        let images: Vec<CMatrix> = basis.iter().map(|b| d.reduce(b, &removed)).collect();
        let map = LinearMapSpec::with_blocks(
            domain,
            images,
            d.abstract_sizes(&env.retained),
            d.abstract_sizes(&removed),
        )?;
        Some(cc_test_seeded(&map, env.options.tol, seed ^ 0xe1)?)
    };
    let max_discrepancy = discrepancy.iter().copied().fold(0.0, f64::max);
    let passed = max_discrepancy <= 1e-6 && inverse.as_ref().is_none_or(|v| v.is_cc());
    Ok(EmbeddingCertificate {
        discrepancy,
        max_discrepancy,
        inverse,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockMatch {
    /// Retained-block positions (in `retained` order) of the two envelopes.
    pub a_block: usize,
    pub b_block: usize,
    /// `π(a) = U a U*` on this pair of blocks.
    pub unitary: CMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct Isomorphism {
    pub blocks: Vec<BlockMatch>,
    /// Worst `‖π(j_A(x)) − j_B(T x)‖` over basis elements and products.
    pub residual: f64,
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut o = vec![0];
    for s in sizes {
        o.push(o.last().unwrap() + s);
    }
    o
}

/// Which block of the layout `o` carries (all of) the diagonal of `p`.
fn owning_block(p: &CMatrix, start: usize, o: &[usize]) -> Option<(usize, f64)> {
    let w: Vec<f64> = o
        .windows(2)
        .map(|w| (w[0]..w[1]).map(|i| p[(start + i, start + i)].re).sum())
        .collect();
    let total: f64 = w.iter().sum();
    let (i, &best) = w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    Some((i, best - total))
}

/// Unitaries `U` with `U a_t = b_t U` for all pairs, as real null space.
fn intertwiners(a: &[CMatrix], b: &[CMatrix], k: usize) -> Result<Vec<CMatrix>, MatError> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * k * k);
    for idx in 0..k * k {
        for phase in [C64::new(1.0, 0.0), I] {
            let e = CMatrix::unit(k, idx / k, idx % k).scale(phase);
            let mut col = Vec::new();
            for (at, bt) in a.iter().zip(b) {
                col.extend((&e.matmul(at) - &bt.matmul(&e)).to_real_vec());
            }
            cols.push(col);
        }
    }
    let len = cols[0].len();
    let rows: Vec<Vec<f64>> = (0..len).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let scale = a.iter().chain(b).map(|m| m.fro_norm()).fold(0.0, f64::max);
    let ns = null_space_scaled(rows, 2 * k * k, scale, RankOptions::default())?;
    Ok(ns
        .iter()
        .map(|v| {
            CMatrix::from_fn(k, k, |i, j| {
                let t = 2 * (i * k + j);
                C64::new(v[t], v[t + 1])
            })
        })
        .collect())
}

fn sampled_isometry_defect(a: &[CMatrix], b: &[CMatrix], seed: u64) -> Result<f64, MatError> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for k in 1..=2 {
        for _ in 0..40 {
            let c = random_coeffs(&mut r, k, a.len());
            let x = op_norm(&amplify(&c, a)?)?;
            let y = op_norm(&amplify(&c, b)?)?;
            worst = worst.max((x - y).abs() / x.max(1e-300));
        }
    }
    Ok(worst)
}

/// The *-isomorphism `C*_e(X_A) → C*_e(X_B)` extending a complete isometry
/// `T : X_A → X_B`, given by the images `T(a_t)` of `X_A`'s basis. `None`
/// when the envelopes are not isomorphic compatibly with `T`.
pub fn induced_isomorphism(
    env_a: &EnvelopePresentation,
    env_b: &EnvelopePresentation,
    correspondence: &[CMatrix],
) -> Result<Option<Isomorphism>, EnvelopeError> {
    let a_basis = env_a.source.basis_matrices();
    if correspondence.len() != a_basis.len() {
        return Err(EnvelopeError::BadCorrespondence { defect: f64::INFINITY });
    }
    let mut defect: f64 = 0.0;
    for t in correspondence {
        defect = defect.max(env_b.source.residual(t) / t.fro_norm().max(1e-300));
    }
    defect = defect.max(sampled_isometry_defect(&a_basis, correspondence, 0xa11)?);
    if defect > 1e-6 {
        return Err(EnvelopeError::BadCorrespondence { defect });
    }
    let mut sa = env_a.abstract_blocks.clone();
    let mut sb = env_b.abstract_blocks.clone();
    sa.sort();
    sb.sort();
    if sa != sb {
        return Ok(None);
    }
    let ga: Vec<CMatrix> = a_basis.iter().map(|x| env_a.reduce(x)).collect();
    let gb: Vec<CMatrix> = correspondence.iter().map(|x| env_b.reduce(x)).collect();
    let na = ga[0].rows();
    let graph: Vec<CMatrix> = ga
        .iter()
        .zip(&gb)
        .map(|(x, y)| CMatrix::direct_sum(&[x.clone(), y.clone()]))
        .collect();
    let (gspace, _) = validate_space(&graph)?;
    let galg = generate_star_algebra(&gspace)?;
    let dim_a: usize = sa.iter().map(|k| k * k).sum();
    if galg.dim() != dim_a {
        return Ok(None);
    }
    let gd = decompose(&galg, env_a.options.seed ^ 0x9a)?;
    let size_a = env_a.decomposition.abstract_sizes(&env_a.retained);
    let size_b = env_b.decomposition.abstract_sizes(&env_b.retained);
    let (oa, ob) = (offsets(&size_a), offsets(&size_b));
    let mut blocks = Vec::new();
    for (gi, p) in gd.projections.iter().enumerate() {
        let (k, m) = gd.block_sizes[gi];
        let pm = p.as_cmatrix();
        let (Some((ia, la)), Some((ib, lb))) = (owning_block(pm, 0, &oa), owning_block(pm, na, &ob)) else {
            return Ok(None);
        };
        if m != 2 || la.abs() > 1e-6 || lb.abs() > 1e-6 || size_a[ia] != k || size_b[ib] != k {
            return Ok(None);
        }
        let pa: Vec<CMatrix> = ga.iter().map(|x| x.submatrix(oa[ia], oa[ia], k, k)).collect();
        let pb: Vec<CMatrix> = gb.iter().map(|x| x.submatrix(ob[ib], ob[ib], k, k)).collect();
        let sols = intertwiners(&pa, &pb, k)?;
        if sols.len() != 2 {
            return Err(EnvelopeError::NumericallyAmbiguous { solutions: sols.len() });
        }
        let u0 = &sols[0];
        let c = u0.adjoint_mul(u0).trace().re / k as f64;
        let u = u0.scale_re(1.0 / c.sqrt());
        if u.adjoint_mul(&u).dist(&CMatrix::identity(k)) > 1e-8 {
            return Err(EnvelopeError::NumericallyAmbiguous { solutions: sols.len() });
        }
        blocks.push(BlockMatch {
            a_block: ia,
            b_block: ib,
            unitary: u,
        });
    }
    let pi = |x: &CMatrix| -> CMatrix {
        let mut parts: Vec<CMatrix> = size_b.iter().map(|&k| CMatrix::zeros(k, k)).collect();
        for bm in &blocks {
            let k = size_a[bm.a_block];
            let xa = x.submatrix(oa[bm.a_block], oa[bm.a_block], k, k);
            parts[bm.b_block] = &(&bm.unitary * &xa) * &bm.unitary.adjoint();
        }
        CMatrix::direct_sum(&parts)
    };
    let mut residual: f64 = 0.0;
    for (x, y) in ga.iter().zip(&gb) {
        residual = residual.max(pi(x).dist(y));
    }
    for (x1, y1) in ga.iter().zip(&gb) {
        for (x2, y2) in ga.iter().zip(&gb) {
            residual = residual.max(pi(&x1.matmul(x2)).dist(&y1.matmul(y2)));
        }
    }
    if residual > 1e-6 {
        return Ok(None);
    }
    Ok(Some(Isomorphism { blocks, residual }))
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitizationMorphism {
    /// `I_n` followed by the basis of `X`.
    pub domain: Vec<CMatrix>,
    /// `q` followed by `x q`.
    pub images: Vec<CMatrix>,
    pub unital_residual: f64,
    pub selfadjoint_residual: f64,
    /// Largest `‖x q − q x q‖` over the algebra basis.
    pub compression_residual: f64,
    /// Smallest eigenvalue of the Choi matrix of `a ↦ q a q`.
    pub choi_min_eig: f64,
    /// Smallest eigenvalue over sampled images of positive elements at
    /// levels 1 and 2, relative to their norms.
    pub sampled_min_eig: f64,
    pub completely_positive: bool,
}

/// The unital map `λ I_n + v ↦ λ q + v q` of `span{X, I_n}` into the
/// unitized envelope, with its positivity checks.
pub fn unitization_morphism(x: &MatrixSpace, env: &EnvelopePresentation) -> Result<UnitizationMorphism, EnvelopeError> {
    let n = x.ambient_dim();
    let q = env.q.as_cmatrix();
    let mut domain = vec![CMatrix::identity(n)];
    domain.extend(x.basis_matrices());
    let images: Vec<CMatrix> = domain.iter().map(|d| d.matmul(q)).collect();
    let unital_residual = images[0].dist(q);
    let selfadjoint_residual = images.iter().map(|m| m.hermitian_deviation()).fold(0.0, f64::max);
    let compression_residual = env
        .algebra
        .basis()
        .iter()
        .map(|b| b.as_cmatrix().matmul(q).dist(&b.as_cmatrix().compress(q)))
        .fold(0.0, f64::max);
    let mut choi = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let block = CMatrix::unit(n, i, j).compress(q);
            choi.set_block(i * n, j * n, &block);
        }
    }
    let choi_min_eig = herm_eig(&HermMatrix::from_hermitian_part(&choi))?.min_value();
    let mut r = rng(0xc9);
    let alg: Vec<CMatrix> = env.algebra.basis().iter().map(|b| b.as_cmatrix().clone()).collect();
    let mut sampled_min_eig = f64::INFINITY;
    for k in 1..=2 {
        let lift = CMatrix::identity(k).kron(q);
        for _ in 0..20 {
            let z = amplify(&random_coeffs(&mut r, k, alg.len()), &alg)?;
            let y = z.adjoint_mul(&z);
            let img = y.compress(&lift);
            let scale = op_norm(&y)?.max(1e-300);
            let e = herm_eig(&HermMatrix::from_hermitian_part(&img))?;
            sampled_min_eig = sampled_min_eig.min(e.min_value() / scale);
        }
    }
    let completely_positive = unital_residual <= 1e-10
        && selfadjoint_residual <= 1e-10
        && compression_residual <= 1e-8
        && choi_min_eig >= -1e-10
        && sampled_min_eig >= -1e-10;
    Ok(UnitizationMorphism {
        domain,
        images,
        unital_residual,
        selfadjoint_residual,
        compression_residual,
        choi_min_eig,
        sampled_min_eig,
        completely_positive,
    })
}
