use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use super::MatError;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Serialized as a list of rows of `[re, im]` pairs.
impl serde::Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            let row: Vec<[f64; 2]> = self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .map(|z| [z.re, z.im])
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::ShapeMismatch {
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Matrix unit `E_ij` of shape `n x n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[i * n + j] = ONE;
        m
    }

    /// Column vector from entries.
    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &CMatrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {:?} x {:?}",
            self.shape(),
            other.shape()
        );
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * p..(k + 1) * p];
                for (o, &b) in row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        CMatrix::from_vec_unchecked(n, p, out)
    }

    /// `self^* other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, other.rows, "adjoint_mul shape mismatch");
        let (n, m, p) = (self.cols, self.rows, other.cols);
        let mut out = vec![ZERO; n * p];
        for k in 0..m {
            let orow = &other.data[k * p..(k + 1) * p];
            for i in 0..n {
                let a = self.data[k * n + i].conj();
                if a == ZERO {
                    continue;
                }
                let row = &mut out[i * p..(i + 1) * p];
                for (o, &b) in row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        CMatrix::from_vec_unchecked(n, p, out)
    }

    /// `v^* self v`.
    pub fn compress(&self, v: &CMatrix) -> CMatrix {
        v.adjoint_mul(&self.matmul(v))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        CMatrix::from_fn(r1 * r2, c1 * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Selects the columns listed in `idx`.
    pub fn select_cols(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Horizontal concatenation.
    pub fn hstack(parts: &[CMatrix]) -> CMatrix {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let mut c0 = 0;
        for p in parts {
            assert_eq!(p.rows, rows, "hstack row mismatch");
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        out
    }

    /// `‖M − M*‖_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Exact Hermitian part `(M + M*)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        assert!(self.is_square());
        let n = self.rows;
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(self[(i, i)].re, 0.0)
            } else {
                (self[(i, j)] + self[(j, i)].conj()) * 0.5
            }
        })
    }

    /// Skew part as a Hermitian matrix: `(M − M*)/(2i)`.
    pub fn skew_hermitian_part(&self) -> CMatrix {
        assert!(self.is_square());
        let n = self.rows;
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(self[(i, i)].im, 0.0)
            } else {
                (self[(i, j)] - self[(j, i)].conj()) * C64::new(0.0, -0.5)
            }
        })
    }

    pub fn dist(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Real vectorization `[re, im]` interleaved, preserving `Re⟨a, b⟩`.
    pub fn to_real_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.data.len());
        for z in &self.data {
            v.push(z.re);
            v.push(z.im);
        }
        v
    }

    pub fn from_real_vec(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
        assert_eq!(v.len(), 2 * rows * cols);
        let data = v.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        CMatrix::from_vec_unchecked(rows, cols, data)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        CMatrix::from_vec_unchecked(self.rows, self.cols, data)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        CMatrix::from_vec_unchecked(self.rows, self.cols, data)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

/// Hilbert–Schmidt inner product `⟨a, b⟩ = trace(b* a)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64, MatError> {
    if a.shape() != b.shape() {
        return Err(MatError::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| y.conj() * x).sum())
}

/// Square matrix with `entry(i,j) = conj(entry(j,i))`, stored exactly symmetrized.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct HermMatrix(CMatrix);

/// Relative Hermitian deviation accepted by [`HermMatrix::new`].
pub const HERM_TOL: f64 = 1e-12;

impl HermMatrix {
    pub fn new(m: CMatrix) -> Result<Self, MatError> {
        if !m.is_square() {
            return Err(MatError::NotSquare(m.shape()));
        }
        if !m.is_finite() {
            return Err(MatError::NonFinite);
        }
        let dev = m.hermitian_deviation();
        let scale = m.fro_norm().max(1e-300);
        if dev > HERM_TOL * scale && dev > 1e-300 {
            return Err(MatError::NotHermitian { deviation: dev / scale });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Takes the Hermitian part without checking the deviation.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        Self(CMatrix::from_real_diag(d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_cmatrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_cmatrix(self) -> CMatrix {
        self.0
    }

    /// Length of [`Self::to_svec`]: `n²`.
    pub fn svec_len(n: usize) -> usize {
        n * n
    }

    /// Isometric real coordinates: diagonal first, then `√2·Re, √2·Im` of the
    /// strict upper triangle, so that `svec(a)·svec(b) = trace(a b)`.
    pub fn to_svec(&self) -> Vec<f64> {
        let n = self.dim();
        let mut v = Vec::with_capacity(n * n);
        svec_into(&self.0, &mut v);
        v
    }

    pub fn from_svec(n: usize, v: &[f64]) -> Self {
        Self(svec_to_cmatrix(n, v))
    }
}

pub(crate) fn svec_into(m: &CMatrix, out: &mut Vec<f64>) {
    let n = m.rows();
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out.push(r2 * z.re);
            out.push(r2 * z.im);
        }
    }
}

pub(crate) fn svec_to_cmatrix(n: usize, v: &[f64]) -> CMatrix {
    assert_eq!(v.len(), n * n, "svec length mismatch");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(v[k] * r, v[k + 1] * r);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

impl AsRef<CMatrix> for HermMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hs_inner_examples() {
        let i2 = CMatrix::identity(2);
        assert_eq!(hs_inner(&i2, &i2).unwrap(), C64::new(2.0, 0.0));
        let e11 = CMatrix::unit(2, 0, 0);
        let e22 = CMatrix::unit(2, 1, 1);
        assert_eq!(hs_inner(&e11, &e22).unwrap(), ZERO);
        assert!(hs_inner(&e11, &CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn rejects_non_hermitian_and_non_finite() {
        let m = CMatrix::unit(2, 0, 1);
        assert!(matches!(HermMatrix::new(m), Err(MatError::NotHermitian { .. })));
        let bad = CMatrix::new(1, 1, vec![C64::new(f64::NAN, 0.0)]);
        assert!(matches!(bad, Err(MatError::NonFinite)));
    }

    #[test]
    fn svec_is_isometric() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 - 1.0, (j as f64) * 0.5));
        let a = HermMatrix::from_hermitian_part(&a);
        let b = HermMatrix::from_hermitian_part(&b);
        let dot: f64 = a.to_svec().iter().zip(b.to_svec()).map(|(x, y)| x * y).sum();
        let tr = (a.as_cmatrix() * b.as_cmatrix()).trace();
        assert!((dot - tr.re).abs() < 1e-12);
        let back = HermMatrix::from_svec(3, &a.to_svec());
        assert!(back.as_cmatrix().dist(a.as_cmatrix()) < 1e-14);
    }

    #[test]
    fn kron_and_adjoint_mul() {
        let a = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64));
        let b = CMatrix::from_fn(2, 2, |i, j| C64::new((i + j) as f64, 1.0));
        let k = a.kron(&b);
        assert_eq!(k.shape(), (4, 6));
        assert_eq!(k[(3, 5)], a[(1, 2)] * b[(1, 1)]);
        let c = CMatrix::from_fn(2, 4, |i, j| C64::new(j as f64, -(i as f64)));
        assert!(a.adjoint_mul(&c).dist(&(&a.adjoint() * &c)) < 1e-14);
    }
}
