//! `min_x ‖T − x‖` over a subspace via the epigraph block `[[tI, T−x],[·, tI]]`.

use crate::matcore::span::{coords, orthonormalize, RankOptions};
use crate::matcore::{op_norm, svec_into, sym_pinv_solve, CMatrix, HermMatrix, C64, I, ZERO};

use super::admm::{solve, SolveOptions};
use super::program::{AffineSet, ConicProgram};
use super::ConeError;

#[derive(Clone, Debug)]
pub struct OpnormMin {
    /// `‖T − Σ c_i b_i‖` evaluated exactly at the returned coefficients.
    pub value: f64,
    pub coeffs: Vec<C64>,
    pub iterations: usize,
}

/// Minimizes over complex coefficients.
pub fn minimize_opnorm(target: &CMatrix, basis: &[CMatrix]) -> Result<OpnormMin, ConeError> {
    minimize_opnorm_with(target, basis, false, 1e-8)
}

/// Minimizes over real coefficients only (the Hermitian part of a
/// selfadjoint space when `target` and `basis` are Hermitian).
pub fn minimize_opnorm_real(target: &CMatrix, basis: &[CMatrix]) -> Result<OpnormMin, ConeError> {
    minimize_opnorm_with(target, basis, true, 1e-8)
}

fn combination(basis: &[CMatrix], c: &[C64], shape: (usize, usize)) -> CMatrix {
    let mut m = CMatrix::zeros(shape.0, shape.1);
    for (b, &ci) in basis.iter().zip(c) {
        m.axpy(ci, b);
    }
    m
}

pub fn minimize_opnorm_with(
    target: &CMatrix,
    basis: &[CMatrix],
    real_coeffs: bool,
    tol: f64,
) -> Result<OpnormMin, ConeError> {
    let shape = target.shape();
    if let Some(b) = basis.iter().find(|b| b.shape() != shape) {
        return Err(ConeError::Mat(crate::matcore::MatError::ShapeMismatch {
            expected: shape,
            found: b.shape(),
        }));
    }
    let tnorm = op_norm(target)?;
    let zero = OpnormMin {
        value: tnorm,
        coeffs: vec![ZERO; basis.len()],
        iterations: 0,
    };
    if basis.is_empty() || tnorm == 0.0 {
        return Ok(zero);
    }
    if let Some(exact) = in_span(target, basis, real_coeffs, tol)? {
        return Ok(exact);
    }

    let (n, m) = shape;
    let d = n + m;
    let embed = |x: &CMatrix| -> Vec<f64> {
        let mut big = CMatrix::zeros(d, d);
        big.set_block(0, n, x);
        big.set_block(n, 0, &x.adjoint());
        let mut v = Vec::with_capacity(d * d);
        svec_into(&big, &mut v);
        v
    };
    let offset = embed(target);
    let mut generators = vec![HermMatrix::identity(d).to_svec()];
    for b in basis {
        generators.push(embed(&b.scale_re(-1.0)));
        if !real_coeffs {
            generators.push(embed(&b.scale(-I)));
        }
    }
    let objective: Vec<f64> = HermMatrix::identity(d).to_svec().iter().map(|v| v / d as f64).collect();
    let p = ConicProgram {
        blocks: vec![d],
        affine: AffineSet::Image { offset, generators },
        objective: Some(objective),
    };
    let out = solve(&p, &SolveOptions::with_tol(tol * tnorm.max(1.0)))?;
    let params = out.params.unwrap_or_default();
    let coeffs: Vec<C64> = (0..basis.len())
        .map(|i| {
            if params.is_empty() {
                ZERO
            } else if real_coeffs {
                C64::new(params[1 + i], 0.0)
            } else {
                C64::new(params[1 + 2 * i], params[2 + 2 * i])
            }
        })
        .collect();
    let value = op_norm(&(target - &combination(basis, &coeffs, shape)))?;
    if value > tnorm {
        return Ok(OpnormMin {
            iterations: out.iterations,
            ..zero
        });
    }
    Ok(OpnormMin {
        value,
        coeffs,
        iterations: out.iterations,
    })
}

/// Least-squares fit; returns it when `target` lies in the span.
fn in_span(target: &CMatrix, basis: &[CMatrix], real_coeffs: bool, tol: f64) -> Result<Option<OpnormMin>, ConeError> {
    let vecs: Vec<Vec<f64>> = if real_coeffs {
        basis.iter().map(|b| b.to_real_vec()).collect()
    } else {
        basis
            .iter()
            .flat_map(|b| [b.to_real_vec(), b.scale(I).to_real_vec()])
            .collect()
    };
    let onb = orthonormalize(vecs.clone(), RankOptions::lenient(1e-10))?;
    let (_, res) = coords(&target.to_real_vec(), &onb);
    if res > tol * target.fro_norm() {
        return Ok(None);
    }
    // Solve the normal equations on the original generators.
    let k = vecs.len();
    let mut g = vec![vec![0.0; k]; k];
    let t = target.to_real_vec();
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = crate::matcore::span::dot(&vecs[i], &vecs[j]);
        }
        rhs[i] = crate::matcore::span::dot(&vecs[i], &t);
    }
    let sol = sym_pinv_solve(&g, &rhs, 1e-12)?;
    let coeffs: Vec<C64> = if real_coeffs {
        sol.iter().map(|&v| C64::new(v, 0.0)).collect()
    } else {
        sol.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
    };
    let value = op_norm(&(target - &combination(basis, &coeffs, target.shape())))?;
    Ok(Some(OpnormMin {
        value,
        coeffs,
        iterations: 0,
    }))
}
