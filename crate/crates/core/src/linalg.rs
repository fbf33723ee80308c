//! Small dense linear algebra: a row-major matrix, a column-selecting
//! Householder QR, and a Jacobi eigensolver for small symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
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

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, got: c.len() });
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                m[(i, k)] = self[(i, j)];
            }
        }
        m
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
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

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: v.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                let ra = r[a];
                for b in a..self.cols {
                    g[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
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

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().sum::<f64>() / a.len() as f64
}

#[derive(Clone)]
struct Reflector {
    offset: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    #[inline]
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.offset..];
        let s = self.beta * dot(&self.v, tail);
        if s != 0.0 {
            for (t, &v) in tail.iter_mut().zip(&self.v) {
                *t -= s * v;
            }
        }
    }
}

/// Householder QR of an `n x k` matrix that processes columns left to right
/// and skips any column whose component orthogonal to the already accepted
/// columns is below `rel_tol` times its own norm.
///
/// The accepted columns form the earliest linearly independent subset in
/// column order. `A[:, kept] = Q R` with `Q` having orthonormal columns.
#[derive(Clone)]
pub struct HouseholderQr {
    n: usize,
    reflectors: Vec<Reflector>,
    /// Upper triangular, `rank x rank`.
    r: Matrix,
    kept: Vec<usize>,
    dropped: Vec<usize>,
}

impl HouseholderQr {
    pub fn new(a: &Matrix, rel_tol: f64) -> Self {
        let n = a.rows();
        let k = a.cols();
        let mut reflectors: Vec<Reflector> = Vec::with_capacity(k.min(n));
        let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(k.min(n));
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for j in 0..k {
            let mut c = a.column(j);
            let orig = norm2(&c);
            let rank = reflectors.len();
            if rank == n || orig == 0.0 {
                dropped.push(j);
                continue;
            }
            for h in &reflectors {
                h.apply(&mut c);
            }
            let res = norm2(&c[rank..]);
            if !(res > rel_tol * orig) {
                dropped.push(j);
                continue;
            }
            let alpha = if c[rank] > 0.0 { -res } else { res };
            let mut v = c[rank..].to_vec();
            v[0] -= alpha;
            let vv = dot(&v, &v);
            let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            let mut rc = c[..rank].to_vec();
            rc.push(alpha);
            r_cols.push(rc);
            reflectors.push(Reflector { offset: rank, v, beta });
            kept.push(j);
        }
        let rank = kept.len();
        let mut r = Matrix::zeros(rank, rank);
        for (j, col) in r_cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                r[(i, j)] = v;
            }
        }
        Self { n, reflectors, r, kept, dropped }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `Qᵀ y` restricted to the first `rank` coordinates.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut z = y.to_vec();
        for h in &self.reflectors {
            h.apply(&mut z);
        }
        z.truncate(self.rank());
        z
    }

    /// Least-squares coefficients for the kept columns.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: y.len() });
        }
        let z = self.qt_mul(y);
        back_substitute(&self.r, &z)
    }

    /// `(I - Q Qᵀ) y`, computed through the reflectors.
    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        let mut z = y.to_vec();
        for h in &self.reflectors {
            h.apply(&mut z);
        }
        z[..self.rank()].iter_mut().for_each(|v| *v = 0.0);
        for h in self.reflectors.iter().rev() {
            h.apply(&mut z);
        }
        z
    }

    /// Thin `Q` (`n x rank`), row-major.
    pub fn thin_q(&self) -> Matrix {
        let rank = self.rank();
        let mut q = Matrix::zeros(self.n, rank);
        let mut e = vec![0.0; self.n];
        for j in 0..rank {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            for h in self.reflectors[..=j].iter().rev() {
                h.apply(&mut e);
            }
            for (i, &v) in e.iter().enumerate() {
                q[(i, j)] = v;
            }
        }
        q
    }

    /// Ratio of the largest to the smallest `|R_jj|`, a cheap condition proxy.
    pub fn diag_ratio(&self) -> f64 {
        let d: Vec<f64> = (0..self.rank()).map(|j| self.r[(j, j)].abs()).collect();
        let max = d.iter().cloned().fold(0.0, f64::max);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.rank() == 0 {
            1.0
        } else {
            max / min
        }
    }
}

/// Solves `R x = z` for upper-triangular `R`.
pub fn back_substitute(r: &Matrix, z: &[f64]) -> Result<Vec<f64>> {
    let k = r.rows();
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = z[i];
        for j in i + 1..k {
            s -= r[(i, j)] * x[j];
        }
        let d = r[(i, i)];
        if d == 0.0 {
            return Err(Error::SingularSystem);
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Squared Euclidean norms of the rows of `q`, using its first `cols` columns.
pub fn row_norms_sq(q: &Matrix, cols: usize) -> Vec<f64> {
    (0..q.rows()).map(|i| q.row(i)[..cols].iter().map(|v| v * v).sum()).collect()
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (ascending) and the matching eigenvectors as columns.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let scale = m.frobenius_sq();
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    (vals, v.select_columns(&order))
}

/// Spectral norm of a symmetric matrix.
pub fn sym_op_norm(a: &Matrix) -> f64 {
    let (vals, _) = sym_eigen(a);
    vals.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest singular value of a tall matrix, via the eigenvalues of `AᵀA`.
pub fn op_norm(a: &Matrix) -> f64 {
    libm::sqrt(sym_op_norm(&a.gram()).max(0.0))
}
