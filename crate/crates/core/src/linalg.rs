//! Dense row-major matrices and the handful of spectral routines the rest of
//! the crate needs.
//!
//! Every fallible operation checks that its output is finite; an overflow
//! surfaces as [`Error::NonFinite`] rather than a silent `inf`.

use std::fmt;

use crate::error::{Error, Result};

/// Rows whose Euclidean norm is at or below this are rejected by
/// [`row_normalize`].
pub const ROW_EPS: f64 = 1e-12;

/// Sweep cap shared by both Jacobi solvers.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Rotation threshold, relative to the magnitudes being rotated.
pub const JACOBI_TOL: f64 = 1e-14;

/// Dense real matrix, row-major, at least 1x1, all entries finite.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

fn check_finite(op: &'static str, data: &[f64]) -> Result<()> {
    if data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("Matrix::new", "rows, cols >= 1", format!("{rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        check_finite("Matrix::new", &data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("{d} columns"),
                    format!("row {i} has {}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, d, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert!(value.is_finite());
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                "matmul",
                format!("{} rows on the right", self.cols),
                format!("{}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut data = vec![0.0; n * p];
        for i in 0..n {
            let out = &mut data[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let b = &rhs.data[k * p..(k + 1) * p];
                for (o, &bv) in out.iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        check_finite("matmul", &data)?;
        Ok(Matrix { rows: n, cols: p, data })
    }

    fn zip_with(&self, rhs: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(
                op,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let data: Vec<f64> = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        check_finite(op, &data)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Result<Matrix> {
        self.map("scale", |x| x * s)
    }

    pub fn map(&self, op: &'static str, f: impl Fn(f64) -> f64) -> Result<Matrix> {
        let data: Vec<f64> = self.data.iter().map(|&x| f(x)).collect();
        check_finite(op, &data)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Scales row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<Matrix> {
        if factors.len() != self.rows {
            return Err(Error::shape(
                "scale_rows",
                format!("{} factors", self.rows),
                format!("{}", factors.len()),
            ));
        }
        let mut data = self.data.clone();
        for (row, &f) in data.chunks_exact_mut(self.cols).zip(factors) {
            row.iter_mut().for_each(|x| *x *= f);
        }
        check_finite("scale_rows", &data)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (m, &x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.rows as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.row_iter().map(|r| r.iter().sum()).collect()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.row_iter().map(norm2).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "max_abs_diff",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (&a, &b)| m.max((a - b).abs())))
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self.get(i, j) == 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    // scaled to survive entries near the overflow threshold
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = v.iter().map(|x| (x / scale).powi(2)).sum();
    scale * s.sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    norm2(&m.data)
}

/// Softmax along each row, shifted by the row max.
pub fn row_softmax(m: &Matrix) -> Matrix {
    let mut data = Vec::with_capacity(m.data.len());
    for row in m.row_iter() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = data.len();
        data.extend(row.iter().map(|&x| (x - max).exp()));
        let total: f64 = data[start..].iter().sum();
        data[start..].iter_mut().for_each(|x| *x /= total);
    }
    Matrix {
        rows: m.rows,
        cols: m.cols,
        data,
    }
}

/// Divides each row by its Euclidean norm.
pub fn row_normalize(m: &Matrix) -> Result<Matrix> {
    row_normalize_with_scales(m).map(|(out, _)| out)
}

/// Like [`row_normalize`] but also returns the diagonal `D_ii = 1/||m_i||`.
pub fn row_normalize_with_scales(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let norms = m.row_norms();
    if let Some((row, &norm)) = norms.iter().enumerate().find(|(_, &n)| !(n > ROW_EPS)) {
        return Err(Error::ZeroRow { row, norm });
    }
    let mut data = m.data.clone();
    for (r, &norm) in data.chunks_exact_mut(m.cols).zip(&norms) {
        r.iter_mut().for_each(|x| *x /= norm);
    }
    let scales = norms.iter().map(|n| 1.0 / n).collect();
    Ok((
        Matrix {
            rows: m.rows,
            cols: m.cols,
            data,
        },
        scales,
    ))
}

/// Thin singular value decomposition `A = U diag(sigma) V^T` from one-sided
/// Jacobi. `sigma` is sorted in descending order and has `min(rows, cols)`
/// entries.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

type Columns = Vec<Vec<f64>>;

/// One-sided (Hestenes) Jacobi on the columns of a tall matrix.
/// Returns the rotated columns (column-major) and the accumulated rotations.
fn hestenes(a: &Matrix) -> Result<(Columns, Columns)> {
    debug_assert!(a.rows >= a.cols);
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((cols, v));
        }
    }
    Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    let wide = a.rows < a.cols;
    let work = if wide { a.transpose() } else { a.clone() };
    let (cols, v) = hestenes(&work)?;
    let m = work.rows;
    let mut order: Vec<(f64, usize)> = cols.iter().enumerate().map(|(j, c)| (norm2(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let k = order.len();
    let sigma: Vec<f64> = order.iter().map(|&(s, _)| s).collect();
    let u = Matrix::from_fn(m, k, |i, r| {
        let (s, j) = order[r];
        if s > 0.0 {
            cols[j][i] / s
        } else {
            0.0
        }
    })?;
    let vm = Matrix::from_fn(work.cols, k, |i, r| v[order[r].1][i])?;
    Ok(if wide {
        Svd { u: vm, sigma, v: u }
    } else {
        Svd { u, sigma, v: vm }
    })
}

/// Smallest and largest of the `min(rows, cols)` singular values.
pub fn singular_extremes(m: &Matrix) -> Result<(f64, f64)> {
    let work = if m.rows < m.cols { m.transpose() } else { m.clone() };
    let (cols, _) = hestenes(&work)?;
    let (lo, hi) = cols
        .iter()
        .map(|c| norm2(c))
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), s| (lo.min(s), hi.max(s)));
    Ok((lo, hi))
}

pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    singular_extremes(m).map(|(_, hi)| hi)
}

/// Nearest orthogonal matrix `U V^T` (all singular values set to one).
pub fn orthogonal_factor(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::shape("orthogonal_factor", "square matrix", format!("{}x{}", m.rows, m.cols)));
    }
    let Svd { u, sigma, v } = svd(m)?;
    if sigma.last().is_some_and(|&s| s <= f64::EPSILON * sigma[0]) {
        return Err(Error::InvalidParameter("orthogonal_factor needs a full-rank matrix".into()));
    }
    u.matmul(&v.transpose())
}

/// Extreme eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen_extremes(m: &Matrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(m)?;
    Ok((eig[0], eig[eig.len() - 1]))
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::shape("symmetric_eigen", "square matrix", format!("{}x{}", m.rows, m.cols)));
    }
    let n = m.rows;
    let tol = 1e-12 * m.max_abs().max(1.0);
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if asym > tol {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (m.get(i, j) + m.get(j, i))).collect())
        .collect();
    let total = norm2(m.as_slice());

    let mut converged = n == 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (lo, hi) = a.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}
