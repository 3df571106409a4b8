//! Small dense linear algebra: a row-major matrix, cyclic Jacobi for
//! symmetric eigenvalues and Householder QR with column pivoting.
//!
//! Everything here is sized for desk-scale problems (k, p up to a few dozen).

use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
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
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                if r[a] == 0.0 {
                    continue;
                }
                for b in a..self.cols {
                    g[(a, b)] += r[a] * r[b];
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

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
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
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Squared Euclidean distance between two equally long slices.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Iterates until the off-diagonal Frobenius mass drops to
/// `tol * ‖G‖_F` (or to `tol` for the zero matrix).
pub fn symmetric_eigenvalues(g: &DenseMatrix, tol: f64) -> Result<Vec<f64>> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.cols() });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tol", "must be positive"));
    }
    let mut a = g.clone();
    let scale = a.frobenius_norm().max(1.0);
    let off = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                // theta.signum() is 1.0 for +0.0
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Result of a pivoted least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    pub rank: usize,
    pub residual_norm_sq: f64,
}

/// Minimises `‖a x − b‖` with Householder QR and column pivoting.
///
/// Fails with [`Error::RankDeficient`] when a pivot falls below
/// `max(rows, cols) · ε_mach · |R₀₀|`.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    if n == 0 {
        return Err(invalid("design", "has no columns"));
    }
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut diag = Vec::with_capacity(steps);

    for k in 0..steps {
        let (mut best, mut best_norm) = (k, -1.0);
        for j in k..n {
            let nrm: f64 = (k..m).map(|i| r[(i, j)] * r[(i, j)]).sum();
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        if best != k {
            for i in 0..m {
                let row = r.row_mut(i);
                row.swap(k, best);
            }
            perm.swap(k, best);
        }
        let norm = best_norm.sqrt();
        if norm == 0.0 {
            diag.push(0.0);
            break;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq = norm_sq(&v);
        if vnorm_sq > 0.0 {
            for j in k..n {
                let proj: f64 = v.iter().enumerate().map(|(t, vt)| vt * r[(k + t, j)]).sum();
                let f = 2.0 * proj / vnorm_sq;
                for (t, vt) in v.iter().enumerate() {
                    r[(k + t, j)] -= f * vt;
                }
            }
            let proj: f64 = v.iter().enumerate().map(|(t, vt)| vt * qtb[k + t]).sum();
            let f = 2.0 * proj / vnorm_sq;
            for (t, vt) in v.iter().enumerate() {
                qtb[k + t] -= f * vt;
            }
        }
        diag.push(r[(k, k)]);
    }

    let lead = diag.first().map_or(0.0, |d| d.abs());
    let tol = (m.max(n) as f64) * f64::EPSILON * lead;
    let rank = diag.iter().take_while(|d| d.abs() > tol).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, cols: n });
    }

    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = qtb[k];
        for j in k + 1..n {
            acc -= r[(k, j)] * z[j];
        }
        z[k] = acc / r[(k, k)];
    }
    let mut solution = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        solution[p] = z[k];
    }
    let residual_norm_sq = norm_sq(&qtb[n..]);
    Ok(LeastSquares { solution, rank, residual_norm_sq })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_and_2x2() {
        let d = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(symmetric_eigenvalues(&d, 1e-12).unwrap(), vec![1.0, 3.0]);

        let g = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigenvalues(&g, 1e-12).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_trace_and_frobenius_preserved() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0).collect())
            .collect();
        let b = DenseMatrix::from_rows(&rows).unwrap();
        let g = b.gram();
        let e = symmetric_eigenvalues(&g, 1e-12).unwrap();
        let trace: f64 = (0..6).map(|i| g[(i, i)]).sum();
        assert!((e.iter().sum::<f64>() - trace).abs() < 1e-9);
        let fro2: f64 = e.iter().map(|x| x * x).sum();
        assert!((fro2 - g.frobenius_norm().powi(2)).abs() < 1e-8);
        assert!(e[0] > -1e-9);
    }

    #[test]
    fn least_squares_exact_system() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let b = [1.0, 3.0, 5.0];
        let ls = least_squares(&a, &b).unwrap();
        assert!((ls.solution[0] - 1.0).abs() < 1e-12);
        assert!((ls.solution[1] - 2.0).abs() < 1e-12);
        assert!(ls.residual_norm_sq < 1e-20);
        assert_eq!(ls.rank, 2);
    }

    #[test]
    fn least_squares_reports_rank() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        match least_squares(&a, &[1.0, 2.0, 3.0]) {
            Err(Error::RankDeficient { rank: 1, cols: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
