//! Seeded random matrices for tests, instance generators and samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{CMatrix, HermMatrix, C64};
use super::span::orthonormal_columns;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(r: &mut impl Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn complex_gaussian(r: &mut impl Rng) -> C64 {
    C64::new(gaussian(r), gaussian(r)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix.
pub fn random_cmatrix(r: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(r))
}

pub fn random_real_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(r), 0.0))
}

pub fn random_hermitian(r: &mut impl Rng, n: usize) -> HermMatrix {
    HermMatrix::from_hermitian_part(&random_cmatrix(r, n, n))
}

/// Random PSD matrix `B*B` of the given rank.
pub fn random_psd(r: &mut impl Rng, n: usize, rank: usize) -> HermMatrix {
    let b = random_cmatrix(r, rank, n);
    HermMatrix::from_hermitian_part(&b.adjoint_mul(&b))
}

/// Haar-distributed unitary (orthonormalized Ginibre columns).
pub fn random_unitary(r: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let g = random_cmatrix(r, n, n);
        let q = orthonormal_columns(&g, 1e-8);
        if q.cols() == n {
            return q;
        }
    }
}

/// Random positive contraction: PSD with spectrum in `[0, 1]`.
pub fn random_positive_contraction(r: &mut impl Rng, n: usize) -> HermMatrix {
    let u = random_unitary(r, n);
    let d: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let m = &(&u * &CMatrix::from_real_diag(&d)) * &u.adjoint();
    HermMatrix::from_hermitian_part(&m)
}
