//! Seeded instance generators for tests, the self-test suite and the
//! acceptance harness.

use rand::Rng;

use crate::conesolver::{AffineSet, ConicProgram};
use crate::matcore::random::{complex_gaussian, gaussian, random_hermitian, random_psd, random_unitary};
use crate::matcore::{CMatrix, HermMatrix, C64};

/// A conic program whose feasibility status is known by construction.
#[derive(Clone, Debug)]
pub struct PlantedProgram {
    pub program: ConicProgram,
    pub feasible: bool,
}

/// Random block sizes, constraint count and status. Feasible programs
/// are built around a sampled PSD point (sometimes rank deficient);
/// infeasible ones contain a combination of rows equal to a positive
/// definite `W` whose right-hand side combination is negative.
pub fn planted_program(r: &mut impl Rng, feasible: bool) -> PlantedProgram {
    let nblocks = r.random_range(1..=3);
    let blocks: Vec<usize> = (0..nblocks).map(|_| r.random_range(1..=4)).collect();
    let dim: usize = blocks.iter().map(|n| n * n).sum();
    let m = r.random_range(1..=dim.min(8));
    let random_row = |r: &mut _| -> Vec<f64> {
        blocks
            .iter()
            .flat_map(|&n| random_hermitian(r, n).to_svec())
            .collect()
    };
    let mut rows: Vec<Vec<f64>> = (0..m).map(|_| random_row(r)).collect();
    let rhs: Vec<f64> = if feasible {
        let pt: Vec<f64> = blocks
            .iter()
            .flat_map(|&n| {
                let rank = if r.random_bool(0.3) { r.random_range(1..=n) } else { n };
                random_psd(r, n, rank).to_svec()
            })
            .collect();
        rows.iter().map(|row| dot(row, &pt)).collect()
    } else {
        let w: Vec<f64> = blocks
            .iter()
            .flat_map(|&n| {
                let p = random_psd(r, n, n);
                HermMatrix::from_hermitian_part(&(p.as_cmatrix() + &CMatrix::identity(n).scale_re(0.1))).to_svec()
            })
            .collect();
        let y: Vec<f64> = (0..m).map(|_| gaussian(r)).collect();
        let ym = if y[m - 1].abs() < 0.2 { 1.0 } else { y[m - 1] };
        let mut last = w.clone();
        for (i, row) in rows.iter().enumerate().take(m - 1) {
            last.iter_mut().zip(row).for_each(|(a, b)| *a -= y[i] * b);
        }
        last.iter_mut().for_each(|a| *a /= ym);
        rows[m - 1] = last;
        let mut b: Vec<f64> = (0..m - 1).map(|_| gaussian(r)).collect();
        let delta = 0.1 + r.random::<f64>();
        let acc: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        b.push((-delta - acc) / ym);
        b
    };
    PlantedProgram {
        program: ConicProgram::feasibility(blocks, AffineSet::Equality { rows, rhs }),
        feasible,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `U (⊕_i M_{k_i} ⊗ 1_{m_i}) U*` sampled as `count` random elements,
/// positive when `positive` is set. Returns the generators and the
/// conjugating unitary.
pub fn random_block_elements(
    r: &mut impl Rng,
    blocks: &[(usize, usize)],
    count: usize,
    positive: bool,
) -> (Vec<CMatrix>, CMatrix) {
    let n: usize = blocks.iter().map(|(k, m)| k * m).sum();
    let u = random_unitary(r, n);
    let gens = (0..count)
        .map(|_| {
            let parts: Vec<CMatrix> = blocks
                .iter()
                .map(|&(k, m)| {
                    let x = if positive {
                        random_psd(r, k, k).into_cmatrix()
                    } else {
                        random_hermitian(r, k).into_cmatrix()
                    };
                    x.kron(&CMatrix::identity(m))
                })
                .collect();
            let d = CMatrix::direct_sum(&parts);
            &(&u * &d) * &u.adjoint()
        })
        .collect();
    (gens, u)
}

/// Random real function space on `points` points spanned by `dim`
/// nonnegative functions; some entries are zeroed to create structure.
pub fn random_function_space(r: &mut impl Rng, points: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|_| {
            (0..points)
                .map(|_| if r.random_bool(0.35) { 0.0 } else { r.random::<f64>() })
                .collect()
        })
        .collect()
}

/// Positive generators with a planted mix of structure: a few base blocks
/// carrying independent PSD data, plus redundant blocks (vector-state
/// compressions of a base block and averages of two base values), all
/// conjugated by a random unitary of size at most `max_n`.
pub fn random_envelope_instance(r: &mut impl Rng, max_n: usize) -> Vec<CMatrix> {
    loop {
        let nbase = r.random_range(1..=3);
        let base: Vec<usize> = (0..nbase).map(|_| r.random_range(1..=3)).collect();
        let extras = r.random_range(0..=2);
        let n: usize = base.iter().sum::<usize>() + extras;
        if n > max_n || n == 0 {
            continue;
        }
        let count = r.random_range(2..=4);
        let gens_base: Vec<Vec<CMatrix>> = (0..count)
            .map(|_| base.iter().map(|&k| random_psd(r, k, k).into_cmatrix()).collect())
            .collect();
        let plans: Vec<(usize, usize, Vec<C64>)> = (0..extras)
            .map(|_| {
                let i = r.random_range(0..nbase);
                let j = r.random_range(0..nbase);
                let k = base[i];
                let xi: Vec<C64> = (0..k).map(|_| complex_gaussian(r)).collect();
                let nx = xi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (i, j, xi.into_iter().map(|z| z / nx).collect())
            })
            .collect();
        let u = random_unitary(r, n);
        let gens = gens_base
            .iter()
            .map(|parts| {
                let mut all = parts.clone();
                for (i, j, xi) in &plans {
                    let a = &parts[*i];
                    let v = a.mul_vec(xi);
                    let s: C64 = xi.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    let val = if base[*j] == 1 && i != j {
                        0.5 * (s.re + parts[*j][(0, 0)].re)
                    } else {
                        s.re
                    };
                    all.push(CMatrix::from_real_diag(&[val]));
                }
                let d = CMatrix::direct_sum(&all);
                &(&u * &d) * &u.adjoint()
            })
            .collect();
        return gens;
    }
}

/// Embeds real functions on a finite set as diagonal matrices.
pub fn diagonal_embedding(functions: &[Vec<f64>]) -> Vec<CMatrix> {
    functions.iter().map(|f| CMatrix::from_real_diag(f)).collect()
}

/// Unused-point-free random function space whose span has a strictly
/// positive element (so the positive cone spans).
pub fn random_spanning_function_space(r: &mut impl Rng, points: usize) -> Vec<Vec<f64>> {
    loop {
        let dim = r.random_range(1..=points);
        let fs = random_function_space(r, points, dim);
        if (0..points).all(|l| fs.iter().any(|f| f[l] > 0.0)) {
            return fs;
        }
    }
}

/// Random selfadjoint `(v, A)` at level `k` over a space of dimension
/// `dim`: `v` has Hermitian-symmetric coordinates of unit scale and `A` is
/// a shifted random PSD matrix, so both signs of membership occur.
pub fn random_unitized_coeffs(r: &mut impl Rng, k: usize, dim: usize) -> (crate::matcore::LevelCoeffs, CMatrix) {
    let mut v = crate::matcore::LevelCoeffs::zeros(k, dim);
    for i in 0..k {
        for j in i..k {
            for t in 0..dim {
                let z = if i == j { C64::new(gaussian(r), 0.0) } else { complex_gaussian(r) };
                v.get_mut(i, j)[t] = z;
                v.get_mut(j, i)[t] = z.conj();
            }
        }
    }
    let shift = 3.0 * r.random::<f64>();
    let p = random_psd(r, k, k).into_cmatrix().scale_re(0.3);
    let a = &p + &CMatrix::identity(k).scale_re(shift);
    (v, a)
}
