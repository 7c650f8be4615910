//! Dense complex linear algebra.

use crate::error::{Error, Result};
use crate::C64;
use std::ops::{Index, IndexMut};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::default(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(ComplexMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_columns(rows: usize, cols: &[Vec<C64>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::default() {
                    continue;
                }
                let orow = other.row(k);
                let mrow = &mut m.data[i * other.cols..(i + 1) * other.cols];
                for (dst, b) in mrow.iter_mut().zip(orow) {
                    *dst += a * b;
                }
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        ComplexMatrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                m[(i, k)] = self[(i, j)];
            }
        }
        m
    }

    /// Stack `self` over `other`.
    pub fn vstack(&self, other: &ComplexMatrix) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        ComplexMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dot_h(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: ComplexMatrix,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &ComplexMatrix) -> Result<Lu> {
        if a.rows != a.cols {
            return Err(Error::Dimension { expected: a.rows, got: a.cols });
        }
        let n = a.rows;
        let scale = a.max_abs();
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= 1e-14 * scale || best == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / d;
                lu[(i, k)] = l;
                if l != C64::default() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Lu { lu, piv })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.piv.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

pub fn solve_square(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if b.len() != a.rows {
        return Err(Error::Dimension { expected: a.rows, got: b.len() });
    }
    Ok(Lu::factor(a)?.solve(b))
}

/// Singular value decomposition `A = U diag(s) V^H` with full square `V`.
///
/// `u` holds `min(rows, cols)` columns; columns belonging to zero singular
/// values are left zero.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Count of singular values above `tol * s[0]`.
    pub fn rank(&self, tol: f64) -> usize {
        match self.s.first() {
            Some(&s0) if s0 > 0.0 => self.rank_abs(tol * s0),
            _ => 0,
        }
    }

    /// Count of singular values above an absolute threshold.
    pub fn rank_abs(&self, threshold: f64) -> usize {
        self.s.iter().filter(|&&s| s > threshold).count()
    }

    /// Columns of `V` past the given rank.
    pub fn null_basis(&self, rank: usize) -> ComplexMatrix {
        let idx: Vec<usize> = (rank..self.v.cols).collect();
        self.v.select_cols(&idx)
    }

    pub fn smallest(&self) -> f64 {
        // trailing singular values of a wide matrix are implicitly zero
        if self.s.len() < self.v.cols {
            0.0
        } else {
            self.s.last().copied().unwrap_or(0.0)
        }
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &ComplexMatrix) -> Svd {
    let (m, n) = (a.rows, a.cols);
    let mut g: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut c = vec![C64::default(); n];
            c[j] = C64::new(1.0, 0.0);
            c
        })
        .collect();
    let eps = 1e-15;
    let mut norms: Vec<f64> = g.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
    // columns below rounding level of the whole matrix are null directions already
    let floor = eps * eps * norms.iter().sum::<f64>();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot_h(&g[i], &g[j]);
                let ga = gamma.norm();
                if ga <= eps * (alpha * beta).sqrt() || ga < 1e-300 {
                    continue;
                }
                rotated = true;
                let phase = gamma / ga;
                let zeta = (beta - alpha) / (2.0 * ga);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                let (gi, gj) = split2(&mut g, i, j);
                for k in 0..m {
                    let a = gi[k];
                    let b = gj[k] * ph;
                    gi[k] = a * c - b * s;
                    gj[k] = a * s + b * c;
                }
                let (vi, vj) = split2(&mut v, i, j);
                for k in 0..n {
                    let a = vi[k];
                    let b = vj[k] * ph;
                    vi[k] = a * c - b * s;
                    vj[k] = a * s + b * c;
                }
                norms[i] = gi.iter().map(|z| z.norm_sqr()).sum();
                norms[j] = gj.iter().map(|z| z.norm_sqr()).sum();
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));
    let k = m.min(n);
    let mut s = Vec::with_capacity(k);
    let mut u = ComplexMatrix::zeros(m, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let sigma = norms[idx].sqrt();
        s.push(sigma);
        if sigma > 0.0 {
            for r in 0..m {
                u[(r, col)] = g[idx][r] / sigma;
            }
        }
    }
    let vcols: Vec<Vec<C64>> = order.iter().map(|&i| v[i].clone()).collect();
    Svd { u, s, v: ComplexMatrix::from_columns(n, &vcols) }
}

fn split2<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (a, b) = v.split_at_mut(j);
    (&mut a[i], &mut b[0])
}

pub fn numerical_rank(a: &ComplexMatrix, tol: f64) -> usize {
    if a.rows == 0 || a.cols == 0 {
        return 0;
    }
    svd(a).rank(tol)
}

/// Orthonormal basis of the numerical null space, one column per null direction.
pub fn null_space(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    if a.rows == 0 {
        return ComplexMatrix::identity(a.cols);
    }
    let d = svd(a);
    let r = d.rank(tol);
    d.null_basis(r)
}

/// Minimum-norm least-squares solution through the pseudoinverse.
pub fn lstsq_min_norm(a: &ComplexMatrix, b: &[C64], tol: f64) -> Result<Vec<C64>> {
    if b.len() != a.rows {
        return Err(Error::Dimension { expected: a.rows, got: b.len() });
    }
    let d = svd(a);
    let r = d.rank(tol);
    let mut x = vec![C64::default(); a.cols];
    for k in 0..r {
        let coef: C64 = (0..a.rows).map(|i| d.u[(i, k)].conj() * b[i]).sum::<C64>() / d.s[k];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += d.v[(j, k)] * coef;
        }
    }
    Ok(x)
}

/// Condition number `s_max / s_min` of a square matrix (infinite when singular).
pub fn condition_number(a: &ComplexMatrix) -> f64 {
    let d = svd(a);
    let lo = d.smallest();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        d.s[0] / lo
    }
}
