//! Small dense linear algebra: row-major matrices, Gaussian elimination and a
//! cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Dimensions in this crate are small (a handful of coordinates), so every
//! routine favors accuracy and simplicity over blocking or SIMD.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which a Gram eigenvalue is treated as
/// zero. Gram eigenvalues are squared singular values, so this corresponds to
/// a relative singular value cutoff of 1e-6.
pub const RANK_TOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix must have at least one row and one column".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of rows, all of which must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    /// Block diagonal matrix with the given square or rectangular blocks.
    pub fn block_diagonal(blocks: &[Matrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m.data[(r0 + i) * cols + c0 + j] = b.get(i, j);
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    /// Vertical concatenation; all matrices must share a column count.
    pub fn stack(parts: &[&Matrix]) -> Result<Self> {
        let cols = parts.first().map(|m| m.cols).unwrap_or(0);
        let mut data = Vec::new();
        let mut rows = 0;
        for m in parts {
            if m.cols != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: m.cols });
            }
            data.extend_from_slice(&m.data);
            rows += m.rows;
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `out = self · x`. Panics on length mismatch.
    #[inline]
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `selfᵀ · y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(m)
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for row in self.data.chunks_exact(n) {
            for i in 0..n {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    g.data[i * n + j] += row[i] * row[j];
                }
            }
        }
        g
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `self + s · other` for equally shaped matrices.
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, found: other.rows * other.cols });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let eig = symmetric_eigen(&self.gram());
        libm::sqrt(eig.values.first().copied().unwrap_or(0.0).max(0.0))
    }
}

/// Eigen-decomposition of a symmetric matrix; eigenvalues sorted in
/// descending order, eigenvectors stored as the matching columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// Number of eigenvalues above `RANK_TOL · λ_max`.
    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.values.iter().filter(|&&l| l > cut).count()
    }

    pub fn cutoff(&self) -> f64 {
        RANK_TOL * self.values.first().copied().unwrap_or(0.0).max(0.0)
    }

    /// Eigenvectors spanning the numerical kernel.
    pub fn kernel(&self) -> Vec<Vec<f64>> {
        let r = self.rank();
        (r..self.values.len()).map(|k| self.vector(k)).collect()
    }
}

/// Cyclic Jacobi eigenvalue iteration. Input must be square; only symmetry
/// up to rounding is assumed.
pub fn symmetric_eigen(m: &Matrix) -> SymmetricEigen {
    assert!(m.is_square(), "symmetric_eigen needs a square matrix");
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);

    let frob2: f64 = a.data.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if off <= 1e-32 * frob2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new, v.get(k, old));
        }
    }
    SymmetricEigen { values, vectors }
}

/// Solves `m · x = rhs` by Gaussian elimination with partial pivoting.
/// Pivots below `1e-12 · max|m|` are reported as singular.
pub fn solve(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput("solve needs a square matrix".into()));
    }
    let n = m.rows;
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let scale = m.max_abs();
    let mut a = m.data.clone();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= 1e-12 * scale || pmax == 0.0 {
            return Err(Error::Singular { pivot: pmax });
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    Ok(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Rank of the column set `vectors` (each of length `dim`).
pub fn rank_of(vectors: &[Vec<f64>], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let mut data = Vec::with_capacity(vectors.len() * dim);
    for v in vectors {
        data.extend_from_slice(v);
    }
    let m = Matrix { rows: vectors.len(), cols: dim, data };
    symmetric_eigen(&m.gram()).rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn jacobi_reconstructs_symmetric_matrix() {
        let m = Matrix::from_rows(&[[4.0, 1.0, -2.0], [1.0, 2.0, 0.5], [-2.0, 0.5, 3.0]]).unwrap();
        let e = symmetric_eigen(&m);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..3 {
            let v = e.vector(k);
            let mv = m.mul_vec(&v);
            for i in 0..3 {
                assert!(approx(mv[i], e.values[k] * v[i], 1e-12));
            }
            assert!(approx(norm2(&v), 1.0, 1e-14));
        }
        let trace: f64 = e.values.iter().sum();
        assert!(approx(trace, 9.0, 1e-12));
    }

    #[test]
    fn kernel_of_rank_deficient_gram() {
        let a = Matrix::from_rows(&[[1.0, 1.0, 0.0]]).unwrap();
        let e = symmetric_eigen(&a.gram());
        assert_eq!(e.rank(), 1);
        let ker = e.kernel();
        assert_eq!(ker.len(), 2);
        for k in &ker {
            assert!(norm2(&a.mul_vec(k)) < 1e-14);
        }
    }

    #[test]
    fn solve_small_system() {
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]).unwrap();
        let x = solve(&m, &[3.0, 5.0]).unwrap();
        assert!(approx(x[0], 0.8, 1e-15) && approx(x[1], 1.4, 1e-15));
    }

    #[test]
    fn solve_reports_singular() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&m, &[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert_eq!(Matrix::new(1, 2, vec![1.0, f64::NAN]), Err(Error::NonFinite(1)));
        assert!(Matrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn spectral_norm_of_rotation_is_one() {
        let r = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        assert!(approx(r.spectral_norm(), 1.0, 1e-15));
        let d = Matrix::from_rows(&[[3.0, 0.0], [0.0, -5.0]]).unwrap();
        assert!(approx(d.spectral_norm(), 5.0, 1e-14));
    }

    #[test]
    fn block_diagonal_layout() {
        let r = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        let m = Matrix::block_diagonal(&[r, Matrix::identity(1)]);
        assert_eq!(m.to_rows(), vec![vec![0.0, -1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }
}
