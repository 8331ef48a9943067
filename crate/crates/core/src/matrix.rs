//! Small dense linear algebra: a row-major matrix, Householder QR, Cholesky
//! and a one-sided Jacobi SVD for condition numbers.
//!
//! Designs in this crate are tall and thin (`n x (d + 2)`), so nothing here is
//! blocked or vectorized beyond what the compiler does on its own.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps row-major `data`. Panics if the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let n = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), n, "ragged columns");
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimensions");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimensions");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                for b in a..p {
                    g[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin Householder QR of a tall matrix, `A = Q R` with `Q` `n x p` having
/// orthonormal columns and `R` `p x p` upper triangular.
#[derive(Debug, Clone)]
pub struct Qr {
    /// `Qᵀ`, stored `p x n` so each basis vector is contiguous.
    qt: Matrix,
    r: Matrix,
}

impl Qr {
    pub fn new(a: &Matrix) -> Qr {
        let (n, p) = (a.rows(), a.cols());
        assert!(n >= p, "QR needs a tall matrix");
        let mut work = a.clone();
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);

        for k in 0..p {
            let norm = math::sqrt((k..n).map(|i| work[(i, k)] * work[(i, k)]).sum());
            let mut v: Vec<f64> = (k..n).map(|i| work[(i, k)]).collect();
            if norm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = math::sqrt(dot(&v, &v));
            if vnorm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            for x in &mut v {
                *x /= vnorm;
            }
            for j in k..p {
                let s: f64 = (k..n).map(|i| v[i - k] * work[(i, j)]).sum();
                for i in k..n {
                    work[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
            reflectors.push(v);
        }

        let mut r = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                r[(i, j)] = work[(i, j)];
            }
        }

        // Accumulate Q = H_0 ... H_{p-1} applied to the first p unit vectors.
        let mut q = Matrix::zeros(n, p);
        for j in 0..p {
            q[(j, j)] = 1.0;
        }
        for k in (0..p).rev() {
            let v = &reflectors[k];
            if v.is_empty() {
                continue;
            }
            for j in 0..p {
                let s: f64 = (k..n).map(|i| v[i - k] * q[(i, j)]).sum();
                for i in k..n {
                    q[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
        }

        Qr { qt: q.transpose(), r }
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// Rows of `Qᵀ`.
    pub fn qt(&self) -> &Matrix {
        &self.qt
    }

    /// `Qᵀ y`.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        (0..self.qt.rows()).map(|k| dot(self.qt.row(k), y)).collect()
    }

    /// Least-squares solution of `A x = y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut b = self.qt_mul(y);
        back_substitute(&self.r, &mut b);
        b
    }
}

/// Solves `R x = b` in place for upper-triangular `R`.
pub fn back_substitute(r: &Matrix, b: &mut [f64]) {
    let p = r.rows();
    for i in (0..p).rev() {
        let mut s = b[i];
        for j in i + 1..p {
            s -= r[(i, j)] * b[j];
        }
        b[i] = s / r[(i, i)];
    }
}

/// Inverse of an upper-triangular matrix.
pub fn upper_triangular_inverse(r: &Matrix) -> Matrix {
    let p = r.rows();
    let mut inv = Matrix::zeros(p, p);
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        back_substitute(r, &mut e);
        for i in 0..p {
            inv[(i, j)] = e[i];
        }
    }
    inv
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// when a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = math::sqrt(d);
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// `log det(A)` from its lower Cholesky factor.
pub fn cholesky_log_det(l: &Matrix) -> f64 {
    2.0 * (0..l.rows()).map(|i| math::ln(l[(i, i)])).sum::<f64>()
}

/// Inverse of an SPD matrix from its lower Cholesky factor.
pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let x = cholesky_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    inv
}

/// Singular values (descending) by one-sided Jacobi rotations. Intended for
/// the small square factors that come out of [`Qr`].
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let (n, p) = (a.rows(), a.cols());
    let mut u = a.clone();
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for j in 0..p {
            for k in j + 1..p {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    alpha += u[(i, j)] * u[(i, j)];
                    beta += u[(i, k)] * u[(i, k)];
                    gamma += u[(i, j)] * u[(i, k)];
                }
                if gamma == 0.0 {
                    continue;
                }
                let denom = math::sqrt(alpha * beta);
                if denom > 0.0 {
                    off = off.max(gamma.abs() / denom);
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..n {
                    let x = u[(i, j)];
                    let y = u[(i, k)];
                    u[(i, j)] = c * x - s * y;
                    u[(i, k)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..p)
        .map(|j| math::sqrt((0..n).map(|i| u[(i, j)] * u[(i, j)]).sum()))
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
