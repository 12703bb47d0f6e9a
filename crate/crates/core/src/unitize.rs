//! Unitizations of a space inside its envelope and the associated order
//! queries.
//!
//! `X¹ = span{j(X), q}` carries the cone of the envelope. Membership in the
//! smaller cone of `X⁺` is decided through Karn's criterion: `(v, A)` is
//! positive iff `A ⪰ 0` and for every `ε > 0` some `u ∈ M_k(X)₊` with
//! `‖u‖ < 1` satisfies `v + (A+ε)^{1/2} u (A+ε)^{1/2} ⪰ 0`. Only finitely
//! many `ε` can be tried, and `‖u‖ < 1` is enforced as `u ⪯ (1−δ)`.

use serde::Serialize;
use thiserror::Error;

use crate::conesolver::{minimize_opnorm_real, solve_feasibility, AffineSet, ConeError, ConicProgram, SolveStatus};
use crate::envelope::{compute_envelope, EnvelopeError, EnvelopePresentation};
use crate::matcore::span::range_basis;
use crate::matcore::{amplify, herm_eig, op_norm, psd_check, CMatrix, HermMatrix, LevelCoeffs, MatError, PsdVerdict, C64};
use crate::stargen::{generate_star_algebra, MatrixSpace, StarError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitizeError {
    #[error("element is not selfadjoint (deviation {deviation:e})")]
    NotSelfadjoint { deviation: f64 },
    #[error("element has {found} coordinates per entry, space has dimension {expected}")]
    ElementNotInSpace { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Star(#[from] StarError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

pub const DEFAULT_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const DEFAULT_DELTA: f64 = 1e-4;

/// `[v_ij + a_ij 1]` with `v ∈ M_k(X)` in coordinates of the source basis.
#[derive(Clone, Debug, Serialize)]
pub struct UnitizedElement {
    pub v: LevelCoeffs,
    pub scalar: CMatrix,
}

impl UnitizedElement {
    pub fn new(v: LevelCoeffs, scalar: CMatrix) -> Result<Self, UnitizeError> {
        if scalar.shape() != (v.k, v.k) {
            return Err(MatError::ShapeMismatch {
                expected: (v.k, v.k),
                found: scalar.shape(),
            }
            .into());
        }
        Ok(Self { v, scalar })
    }

    pub fn level(&self) -> usize {
        self.v.k
    }

    /// Largest violation of `v_ji = v_ij*` (Hermitian basis) and `A = A*`.
    pub fn selfadjoint_deviation(&self) -> f64 {
        let k = self.v.k;
        let mut worst = self.scalar.hermitian_deviation();
        for i in 0..k {
            for j in 0..k {
                for (a, b) in self.v.get(i, j).iter().zip(self.v.get(j, i)) {
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    fn check(&self, dim: usize) -> Result<(), UnitizeError> {
        if self.v.dim != dim {
            return Err(UnitizeError::ElementNotInSpace {
                expected: dim,
                found: self.v.dim,
            });
        }
        let deviation = self.selfadjoint_deviation();
        if deviation > 1e-10 {
            return Err(UnitizeError::NotSelfadjoint { deviation });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct UnitizedSpace {
    pub space: MatrixSpace,
    pub unit: HermMatrix,
    /// `q` already lies in `j(X)`, so `X¹ = j(X)`.
    pub unital: bool,
}

pub fn build_x1(env: &EnvelopePresentation) -> Result<UnitizedSpace, UnitizeError> {
    let y = env.embedded_space()?;
    let q = env.q.clone();
    let rel = y.residual(q.as_cmatrix()) / q.as_cmatrix().fro_norm();
    if rel <= 1e-8 {
        return Ok(UnitizedSpace {
            space: y,
            unit: q,
            unital: true,
        });
    }
    let (space, _) = y.extended(std::slice::from_ref(&q))?;
    Ok(UnitizedSpace {
        space,
        unit: q,
        unital: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub enum ConeCertificate {
    /// Smallest eigenvalue of the tested matrix.
    Eigen { min_eig: f64 },
    /// Unit vector with `⟨M ξ, ξ⟩ = min_eig < 0`.
    NegativeDirection { min_eig: f64, vector: Vec<C64> },
    /// Real coordinates of `u` (over `H_s ⊗ b_t`) and the smallest
    /// eigenvalue over the three re-verified inequalities.
    KarnWitness { eps: f64, u: Vec<f64>, min_eig: f64 },
    /// Normalized dual functional that is positive on the cones and
    /// negative on the affine set.
    Separating { eps: f64, margin: f64, min_eig: f64 },
    Marginal { eps: f64, primal_residual: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeVerdict {
    pub member: Membership,
    pub certificates: Vec<ConeCertificate>,
    pub eps_schedule_used: Vec<f64>,
    pub delta: f64,
    /// Feasibility status for each scheduled `ε`.
    pub per_eps: Vec<(f64, SolveStatus)>,
}

impl ConeVerdict {
    fn simple(member: Membership, cert: ConeCertificate) -> Self {
        Self {
            member,
            certificates: vec![cert],
            eps_schedule_used: Vec::new(),
            delta: 0.0,
            per_eps: Vec::new(),
        }
    }
}

fn eigen_verdict(m: &HermMatrix, tol: f64) -> Result<ConeVerdict, UnitizeError> {
    let scale = op_norm(m.as_cmatrix())?.max(1.0);
    Ok(match psd_check(m, tol * scale)? {
        PsdVerdict::Positive { min_eig } => ConeVerdict::simple(Membership::Yes, ConeCertificate::Eigen { min_eig }),
        PsdVerdict::Indefinite { min_eig, witness } => ConeVerdict::simple(
            Membership::No,
            ConeCertificate::NegativeDirection {
                min_eig,
                vector: witness,
            },
        ),
    })
}

fn support_basis(p: &HermMatrix) -> Result<CMatrix, MatError> {
    Ok(range_basis(&herm_eig(p)?, 0.5))
}

/// Membership of `[v_ij q + a_ij q]` in the positive cone of `M_k` of the
/// envelope, decided by its spectrum on `range(1_k ⊗ q)`.
pub fn x1_cone_member(env: &EnvelopePresentation, elem: &UnitizedElement, tol: f64) -> Result<ConeVerdict, UnitizeError> {
    elem.check(env.source.dim())?;
    let r = support_basis(&env.q)?;
    let basis: Vec<CMatrix> = env.embedded_basis.iter().map(|b| b.compress(&r)).collect();
    let v = amplify(&elem.v, &basis)?;
    let m = &v + &elem.scalar.kron(&CMatrix::identity(r.cols()));
    eigen_verdict(&HermMatrix::from_hermitian_part(&m), tol)
}

fn hermitian_units(k: usize) -> Vec<HermMatrix> {
    let len = HermMatrix::svec_len(k);
    (0..len)
        .map(|i| {
            let mut e = vec![0.0; len];
            e[i] = 1.0;
            HermMatrix::from_svec(k, &e)
        })
        .collect()
}

struct KarnProgram {
    program: ConicProgram,
    /// `H_s ⊗ b_t` on the support, in parameter order.
    elements: Vec<CMatrix>,
    offset: Vec<HermMatrix>,
    sandwich: CMatrix,
}

fn karn_program(
    basis: &[CMatrix],
    v: &CMatrix,
    sqrt_a: &CMatrix,
    delta: f64,
) -> KarnProgram {
    let k = sqrt_a.rows();
    let r = basis[0].rows();
    let s = sqrt_a.kron(&CMatrix::identity(r));
    let mut elements = Vec::new();
    let mut generators = Vec::new();
    for h in hermitian_units(k) {
        for b in basis {
            let u = h.as_cmatrix().kron(b);
            let blocks = [
                HermMatrix::from_hermitian_part(&u),
                HermMatrix::from_hermitian_part(&u.scale_re(-1.0)),
                HermMatrix::from_hermitian_part(&(&(&s * &u) * &s)),
            ];
            generators.push(ConicProgram::stack(&blocks));
            elements.push(u);
        }
    }
    let n = k * r;
    let offset = vec![
        HermMatrix::zeros(n),
        HermMatrix::from_hermitian_part(&CMatrix::identity(n).scale_re(1.0 - delta)),
        HermMatrix::from_hermitian_part(v),
    ];
    let program = ConicProgram::feasibility(
        vec![n; 3],
        AffineSet::Image {
            offset: ConicProgram::stack(&offset),
            generators,
        },
    );
    KarnProgram {
        program,
        elements,
        offset,
        sandwich: s,
    }
}

fn karn_min_eig(kp: &KarnProgram, params: &[f64]) -> Result<f64, MatError> {
    let n = kp.offset[0].dim();
    let mut u = CMatrix::zeros(n, n);
    for (e, &c) in kp.elements.iter().zip(params) {
        u.axpy(C64::new(c, 0.0), e);
    }
    let checks = [
        u.clone(),
        &kp.offset[1].as_cmatrix().clone() - &u,
        kp.offset[2].as_cmatrix() + &(&(&kp.sandwich * &u) * &kp.sandwich),
    ];
    let mut worst = f64::INFINITY;
    for c in &checks {
        worst = worst.min(herm_eig(&HermMatrix::from_hermitian_part(c))?.min_value());
    }
    Ok(worst)
}

/// Karn-cone membership of `(v, A)`, posed in the order of `X` itself on
/// the support of its generated algebra. The norm bound on `u` is the
/// same there as in the envelope because the embedding is completely
/// isometric.
pub fn xplus_cone_member(
    env: &EnvelopePresentation,
    elem: &UnitizedElement,
    eps_schedule: &[f64],
    delta: f64,
    tol: f64,
) -> Result<ConeVerdict, UnitizeError> {
    elem.check(env.source.dim())?;
    if eps_schedule.is_empty() || eps_schedule.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
        return Err(UnitizeError::BadParameter("eps schedule must be nonempty and positive".into()));
    }
    if eps_schedule.windows(2).any(|w| w[1] > w[0]) {
        return Err(UnitizeError::BadParameter("eps schedule must be decreasing".into()));
    }
    if !(delta > 0.0 && delta <= 1e-2) {
        return Err(UnitizeError::BadParameter(format!("delta {delta} outside (0, 1e-2]")));
    }
    let k = elem.level();
    let a = HermMatrix::from_hermitian_part(&elem.scalar);
    let ae = herm_eig(&a)?;
    let a_scale = ae.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if ae.min_value() < -tol * a_scale {
        let mut out = ConeVerdict::simple(
            Membership::No,
            ConeCertificate::NegativeDirection {
                min_eig: ae.min_value(),
                vector: ae.vectors.col(k - 1),
            },
        );
        out.delta = delta;
        return Ok(out);
    }
    let r = support_basis(env.algebra.unit())?;
    let basis: Vec<CMatrix> = env.source.basis().iter().map(|b| b.as_cmatrix().compress(&r)).collect();
    let v = amplify(&elem.v, &basis)?;
    let solve_tol = tol.clamp(1e-10, 1e-3);
    let mut certificates = Vec::new();
    let mut per_eps = Vec::new();
    let mut any_no = false;
    let mut any_marginal = false;
    for &eps in eps_schedule {
        let sqrt_a = ae.reconstruct_with(|x| (x.max(0.0) + eps).sqrt());
        let kp = karn_program(&basis, &v, &sqrt_a, delta);
        let out = solve_feasibility(&kp.program, solve_tol)?;
        let mut status = out.status;
        match out.status {
            SolveStatus::Feasible => {
                let u = out.params.clone().unwrap_or_default();
                let min_eig = karn_min_eig(&kp, &u)?;
                if min_eig >= -10.0 * solve_tol {
                    certificates.push(ConeCertificate::KarnWitness { eps, u, min_eig });
                } else {
                    status = SolveStatus::Marginal;
                    any_marginal = true;
                    certificates.push(ConeCertificate::Marginal {
                        eps,
                        primal_residual: -min_eig,
                    });
                }
            }
            SolveStatus::Infeasible => {
                any_no = true;
                let (margin, min_eig) = match &out.witness {
                    Some(crate::conesolver::DualWitness::Separating {
                        affine_value, min_eig, ..
                    }) => (-affine_value, *min_eig),
                    Some(w) => (w.margin(), 0.0),
                    None => (0.0, 0.0),
                };
                certificates.push(ConeCertificate::Separating { eps, margin, min_eig });
            }
            SolveStatus::Marginal => {
                any_marginal = true;
                certificates.push(ConeCertificate::Marginal {
                    eps,
                    primal_residual: out.primal_residual,
                });
            }
        }
        per_eps.push((eps, status));
    }
    let member = if any_no {
        Membership::No
    } else if any_marginal {
        Membership::Inconclusive
    } else {
        Membership::Yes
    };
    Ok(ConeVerdict {
        member,
        certificates,
        eps_schedule_used: eps_schedule.to_vec(),
        delta,
        per_eps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnitChoice {
    /// The unit `q` of the envelope; the space is `j(X)`.
    EnvelopeUnit,
    /// The identity of the ambient `M_n`; the space is `X`.
    AmbientIdentity,
}

fn space_and_unit(env: &EnvelopePresentation, unit: UnitChoice) -> (Vec<CMatrix>, CMatrix) {
    match unit {
        UnitChoice::EnvelopeUnit => (env.embedded_basis.clone(), env.q.as_cmatrix().clone()),
        UnitChoice::AmbientIdentity => (
            env.source.basis_matrices(),
            CMatrix::identity(env.source.ambient_dim()),
        ),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Distance {
    pub d: f64,
    /// Real coordinates of the minimizer over the (Hermitian) basis.
    pub coords: Vec<f64>,
    pub argmin: CMatrix,
}

/// `d = min_{x ∈ X_sa} ‖1 − x‖` for a Hermitian basis and unit.
pub fn distance_in(basis: &[CMatrix], unit: &CMatrix) -> Result<Distance, UnitizeError> {
    let m = minimize_opnorm_real(unit, basis)?;
    let coords: Vec<f64> = m.coeffs.iter().map(|c| c.re).collect();
    let mut argmin = CMatrix::zeros(unit.rows(), unit.cols());
    for (b, &c) in basis.iter().zip(&coords) {
        argmin.axpy(C64::new(c, 0.0), b);
    }
    Ok(Distance { d: m.value, coords, argmin })
}

pub fn distance_to_unit(env: &EnvelopePresentation, unit: UnitChoice) -> Result<Distance, UnitizeError> {
    let (basis, u) = space_and_unit(env, unit);
    distance_in(&basis, &u)
}

#[derive(Clone, Debug, Serialize)]
pub enum Domination {
    /// `v = Σ coords_t b_t` with `λ_min(v − 1) = min_eig`.
    Found { coords: Vec<f64>, min_eig: f64 },
    None { margin: f64 },
    Inconclusive { primal_residual: f64 },
}

impl Domination {
    pub fn found(&self) -> bool {
        matches!(self, Domination::Found { .. })
    }
}

/// Searches for Hermitian `v` in the span of `basis` with `v ⪰ unit`,
/// posed on the range of `unit`.
pub fn dominating_in(basis: &[CMatrix], unit: &HermMatrix, tol: f64) -> Result<Domination, UnitizeError> {
    let r = support_basis(unit)?;
    let n = r.cols();
    let cb: Vec<HermMatrix> = basis
        .iter()
        .map(|b| HermMatrix::from_hermitian_part(&b.compress(&r)))
        .collect();
    let offset = HermMatrix::from_hermitian_part(&CMatrix::identity(n).scale_re(-1.0));
    let program = ConicProgram::feasibility(
        vec![n],
        AffineSet::Image {
            offset: offset.to_svec(),
            generators: cb.iter().map(|b| b.to_svec()).collect(),
        },
    );
    let full = unit.dim() == n;
    let out = solve_feasibility(&program, tol.clamp(1e-10, 1e-3))?;
    Ok(match out.status {
        SolveStatus::Feasible => {
            let coords = out.params.unwrap_or_default();
            let mut v = CMatrix::zeros(unit.dim(), unit.dim());
            for (b, &c) in basis.iter().zip(&coords) {
                v.axpy(C64::new(c, 0.0), b);
            }
            let diff = &v - unit.as_cmatrix();
            let checked = if full { diff } else { diff.compress(&r) };
            let min_eig = herm_eig(&HermMatrix::from_hermitian_part(&checked))?.min_value();
            if min_eig >= -10.0 * tol {
                Domination::Found { coords, min_eig }
            } else {
                Domination::Inconclusive {
                    primal_residual: -min_eig,
                }
            }
        }
        SolveStatus::Infeasible => Domination::None {
            margin: out.witness.map(|w| w.margin()).unwrap_or(0.0),
        },
        SolveStatus::Marginal => Domination::Inconclusive {
            primal_residual: out.primal_residual,
        },
    })
}

pub fn dominating_element(env: &EnvelopePresentation, unit: UnitChoice, tol: f64) -> Result<Domination, UnitizeError> {
    let (basis, u) = space_and_unit(env, unit);
    let u = HermMatrix::from_hermitian_part(&u);
    dominating_in(&basis, &u, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitizationEnvelopeReport {
    pub x1_dim: usize,
    pub unital: bool,
    pub blocks: Vec<usize>,
    pub blocks_of_x1: Vec<usize>,
    pub eliminated: usize,
    pub trace: Vec<crate::envelope::TraceEntry>,
    /// Mutual residual between the algebra generated by `X¹` and `B q`.
    pub algebra_residual: f64,
    pub equal: bool,
}

/// Computes the envelope of `X¹` and compares it with the envelope of `X`.
pub fn check_envelope_of_unitization(env: &EnvelopePresentation) -> Result<UnitizationEnvelopeReport, UnitizeError> {
    let x1 = build_x1(env)?;
    let e1 = compute_envelope(&x1.space, env.options)?;
    let bq: Vec<CMatrix> = env.algebra.basis().iter().map(|b| env.embed(b.as_cmatrix())).collect();
    let (bq_space, _) = crate::stargen::validate_space(&bq)?;
    let gen = generate_star_algebra(&x1.space)?;
    let mut algebra_residual: f64 = 0.0;
    for b in gen.basis() {
        algebra_residual = algebra_residual.max(bq_space.residual(b.as_cmatrix()));
    }
    for b in bq_space.basis() {
        algebra_residual = algebra_residual.max(gen.residual(b.as_cmatrix()));
    }
    let equal = e1.abstract_blocks == env.abstract_blocks
        && e1.removed().is_empty()
        && gen.dim() == bq_space.dim()
        && algebra_residual <= 1e-8;
    Ok(UnitizationEnvelopeReport {
        x1_dim: x1.space.dim(),
        unital: x1.unital,
        blocks: env.abstract_blocks.clone(),
        blocks_of_x1: e1.abstract_blocks.clone(),
        eliminated: e1.removed().len(),
        trace: e1.elimination_trace,
        algebra_residual,
        equal,
    })
}

/// `‖T₁ − T₂‖` for positive contractions (at most 1).
pub fn contraction_gap(t1: &HermMatrix, t2: &HermMatrix) -> Result<f64, MatError> {
    op_norm(&(t1.as_cmatrix() - t2.as_cmatrix()))
}
