//! Douglas–Rachford splitting between the affine set and the PSD cone.

use crate::matcore::span::{dot, norm};
use crate::matcore::{herm_eig, herm_eig_warm, svec_into, svec_to_cmatrix, CMatrix, HermMatrix, HermEigen};

use super::program::{AffineProjector, ConicProgram, Factored};
use super::ConeError;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation parameter in `(0, 2)`.
    pub alpha: f64,
    pub rho: f64,
    pub check_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 50_000,
            alpha: 1.6,
            rho: 1.0,
            check_every: 25,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    Marginal,
}

#[derive(Clone, Debug)]
pub enum DualWitness {
    /// `W` with `⟨W, a⟩ = affine_value < 0` on the whole affine set and
    /// `λ_min(W) = min_eig` (normalized `‖W‖_F = 1`). No feasible point
    /// with trace below `trace_bound` exists; the bound is infinite when
    /// `W` is exactly PSD.
    Separating {
        blocks: Vec<HermMatrix>,
        affine_value: f64,
        min_eig: f64,
        trace_bound: f64,
    },
    /// The equality constraints alone are inconsistent.
    InconsistentEquations { residual: f64 },
}

impl DualWitness {
    pub fn margin(&self) -> f64 {
        match self {
            DualWitness::Separating { affine_value, .. } => -affine_value,
            DualWitness::InconsistentEquations { residual } => *residual,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Last affine iterate; exact on the affine set with
    /// `λ_min ≥ −primal_residual` on every block.
    pub point: Option<Vec<HermMatrix>>,
    /// Parameters of `point` for image-form programs.
    pub params: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub witness: Option<DualWitness>,
    /// Dual slack `−ρu`, PSD by construction.
    pub dual_slack: Option<Vec<HermMatrix>>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub stopped_early: bool,
}

/// Decides feasibility of `p` at tolerance `tol ∈ [1e−10, 1e−3]`.
pub fn solve_feasibility(p: &ConicProgram, tol: f64) -> Result<SolveOutcome, ConeError> {
    if !(1e-10..=1e-3).contains(&tol) {
        return Err(ConeError::BadProgram(format!("tolerance {tol:e} outside [1e-10, 1e-3]")));
    }
    let q = ConicProgram {
        objective: None,
        ..p.clone()
    };
    solve(&q, &SolveOptions::with_tol(tol))
}

pub fn solve(p: &ConicProgram, opts: &SolveOptions) -> Result<SolveOutcome, ConeError> {
    solve_monitored(p, opts, &mut |_| false)
}

struct Cone {
    blocks: Vec<usize>,
    offsets: Vec<usize>,
    cache: Vec<Option<CMatrix>>,
    buf: Vec<f64>,
}

impl Cone {
    fn new(p: &ConicProgram) -> Self {
        Self {
            blocks: p.blocks.clone(),
            offsets: p.offsets(),
            cache: vec![None; p.blocks.len()],
            buf: Vec::new(),
        }
    }

    fn eig(&mut self, b: usize, v: &[f64]) -> HermEigen {
        let n = self.blocks[b];
        let m = HermMatrix::from_hermitian_part(&svec_to_cmatrix(n, v));
        let e = match &self.cache[b] {
            Some(g) => herm_eig_warm(&m, g),
            None => herm_eig(&m),
        }
        .expect("finite iterate");
        self.cache[b] = Some(e.vectors.clone());
        e
    }

    /// Projects every block of `v` onto the PSD cone, in place.
    fn project(&mut self, v: &mut [f64]) {
        for b in 0..self.blocks.len() {
            let (lo, hi) = (self.offsets[b], self.offsets[b + 1]);
            let n = self.blocks[b];
            if n == 1 {
                v[lo] = v[lo].max(0.0);
                continue;
            }
            let e = self.eig(b, &v[lo..hi]);
            if e.min_value() >= 0.0 {
                continue;
            }
            let mut out = std::mem::take(&mut self.buf);
            out.clear();
            if e.max_value() <= 0.0 {
                v[lo..hi].iter_mut().for_each(|x| *x = 0.0);
            } else {
                svec_into(&e.reconstruct_with(|x| x.max(0.0)), &mut out);
                v[lo..hi].copy_from_slice(&out);
            }
            self.buf = out;
        }
    }

    fn min_eig(&self, v: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for b in 0..self.blocks.len() {
            let n = self.blocks[b];
            let s = &v[self.offsets[b]..self.offsets[b + 1]];
            let e = herm_eig(&HermMatrix::from_svec(n, s)).expect("finite");
            m = m.min(e.min_value());
        }
        m
    }
}

/// Runs the splitting; `monitor` sees the affine iterate at every check
/// and may stop the run early by returning `true`.
pub fn solve_monitored(
    p: &ConicProgram,
    opts: &SolveOptions,
    monitor: &mut dyn FnMut(&[f64]) -> bool,
) -> Result<SolveOutcome, ConeError> {
    p.validate()?;
    if !(opts.alpha > 0.0 && opts.alpha < 2.0) || opts.rho <= 0.0 || opts.tol <= 0.0 {
        return Err(ConeError::BadProgram("invalid solver options".into()));
    }
    let proj = match AffineProjector::new(p) {
        Factored::Ok(a) => a,
        Factored::Inconsistent(residual) => {
            return Ok(SolveOutcome {
                status: SolveStatus::Infeasible,
                point: None,
                params: None,
                objective: None,
                witness: Some(DualWitness::InconsistentEquations { residual }),
                dual_slack: None,
                primal_residual: residual,
                dual_residual: 0.0,
                iterations: 0,
                stopped_early: false,
            })
        }
    };
    let n = p.dim();
    let mut cone = Cone::new(p);
    let tol = opts.tol;
    let c = p.objective.clone();
    let cnorm = c.as_ref().map(|c| norm(c)).unwrap_or(0.0);
    let mut rho = opts.rho;
    let alpha = opts.alpha;

    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut xh = vec![0.0; n];
    let mut z_prev = vec![0.0; n];
    let mut du_prev: Option<Vec<f64>> = None;
    let mut last_rho_change = 0usize;
    let mut r_p = f64::INFINITY;
    let mut r_d = f64::INFINITY;
    let mut status = SolveStatus::Marginal;
    let mut witness = None;
    let mut stopped_early = false;
    let mut iters = 0;

    for k in 1..=opts.max_iter {
        iters = k;
        for i in 0..n {
            x[i] = z[i] - u[i];
        }
        if let Some(c) = &c {
            for i in 0..n {
                x[i] -= c[i] / rho;
            }
        }
        proj.project(&mut x);
        for i in 0..n {
            xh[i] = alpha * x[i] + (1.0 - alpha) * z[i];
        }
        z_prev.copy_from_slice(&z);
        for i in 0..n {
            z[i] = xh[i] + u[i];
        }
        cone.project(&mut z);
        for i in 0..n {
            u[i] += xh[i] - z[i];
        }
        if k % opts.check_every != 0 && k != opts.max_iter {
            continue;
        }
        r_p = x.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        r_d = rho * z.iter().zip(&z_prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if monitor(&x) {
            status = SolveStatus::Feasible;
            stopped_early = true;
            break;
        }
        match &c {
            None => {
                if r_p <= tol {
                    status = SolveStatus::Feasible;
                    break;
                }
                let du: Vec<f64> = xh.iter().zip(&z).map(|(a, b)| a - b).collect();
                let dn = norm(&du);
                let stable = du_prev
                    .as_ref()
                    .map(|d| {
                        let diff: f64 = d.iter().zip(&du).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        diff <= 1e-3 * dn
                    })
                    .unwrap_or(false);
                du_prev = Some(du.clone());
                if !stable || k < 100 {
                    continue;
                }
                if dn <= 10.0 * tol {
                    if k >= 2000 {
                        break;
                    }
                    continue;
                }
                if let Some(w) = separating_witness(p, &proj, &mut cone, &du, tol) {
                    status = SolveStatus::Infeasible;
                    witness = Some(w);
                    break;
                }
            }
            Some(_) => {
                if r_p <= tol && r_d <= tol * cnorm.max(1.0) {
                    status = SolveStatus::Feasible;
                    break;
                }
                if k - last_rho_change >= 100 {
                    let factor = if r_p > 10.0 * r_d {
                        2.0
                    } else if r_d > 10.0 * r_p {
                        0.5
                    } else {
                        1.0
                    };
                    if factor != 1.0 {
                        rho *= factor;
                        u.iter_mut().for_each(|v| *v /= factor);
                        last_rho_change = k;
                    }
                }
            }
        }
    }

    let slack: Vec<f64> = u.iter().map(|v| -rho * v).collect();
    let feasible_point = status != SolveStatus::Infeasible;
    Ok(SolveOutcome {
        status,
        point: feasible_point.then(|| p.unstack(&x)),
        params: if feasible_point { proj.parameters(&x) } else { None },
        objective: c.as_ref().map(|c| dot(c, &x)),
        witness,
        dual_slack: Some(p.unstack(&slack)),
        primal_residual: r_p,
        dual_residual: r_d,
        iterations: iters,
        stopped_early,
    })
}

const POLISH_STEPS: usize = 5000;
const POLISH_TOL: f64 = 1e-13;

fn normalized(mut w: Vec<f64>) -> Option<Vec<f64>> {
    let wn = norm(&w);
    if wn == 0.0 {
        return None;
    }
    w.iter_mut().for_each(|v| *v /= wn);
    Some(w)
}

/// Builds and verifies the separating functional `N(−g)` from the limiting
/// displacement `g`.
fn separating_witness(
    p: &ConicProgram,
    proj: &AffineProjector,
    cone: &mut Cone,
    g: &[f64],
    tol: f64,
) -> Option<DualWitness> {
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut w = normalized(proj.normal_part(&neg))?;
    let mut min_eig = cone.min_eig(&w);
    // Alternating projections onto the PSD cone and the normal space;
    // keeps the most nearly PSD iterate.
    let mut z = w.clone();
    for _ in 0..POLISH_STEPS {
        if min_eig >= -POLISH_TOL {
            break;
        }
        cone.project(&mut z);
        let Some(next) = normalized(proj.normal_part(&z)) else { break };
        if dot(&next, &proj.base) >= -10.0 * tol {
            break;
        }
        let e = cone.min_eig(&next);
        if e > min_eig {
            w.copy_from_slice(&next);
            min_eig = e;
        }
        z = next;
    }
    let affine_value = dot(&w, &proj.base);
    if affine_value >= -10.0 * tol {
        return None;
    }
    if min_eig < -1e-6 {
        return None;
    }
    let trace_bound = if min_eig >= 0.0 {
        f64::INFINITY
    } else {
        -affine_value / -min_eig
    };
    Some(DualWitness::Separating {
        blocks: p.unstack(&w),
        affine_value,
        min_eig,
        trace_bound,
    })
}
