//! Dense row-major matrices, a one-sided Jacobi compact SVD and Spearman
//! rank correlation.
//!
//! Everything here is plain `f64` arithmetic on small dense problems. Vectors
//! are ordinary slices.

use crate::error::{Error, Result};

/// Off-diagonal rotation threshold, relative to the column norms.
const JACOBI_TOL: f64 = 1e-14;
/// Singular values below `RANK_CUTOFF * s[0]` are dropped.
pub const RANK_CUTOFF: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::shape("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given equal-length vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::shape("ragged columns"));
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
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
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sum of each column.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Compact SVD `A = U · diag(S) · H` with `U` of size d×r and `H` of size r×M.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub h: Matrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (k, &s) in self.s.iter().enumerate() {
                us[(i, k)] *= s;
            }
        }
        us.matmul(&self.h).expect("svd factors have matching shapes")
    }
}

/// Compact singular value decomposition by one-sided Jacobi rotations.
///
/// Singular values come back in descending order with everything below
/// `RANK_CUTOFF * s[0]` dropped, so `r` is the numerical rank (0 for a zero
/// matrix). In every column of `U` the entry of largest magnitude is
/// non-negative, lowest index winning ties; the compensating sign lives in
/// the matching row of `H`.
pub fn compact_svd(a: &Matrix) -> Result<Svd> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::invalid("svd of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("svd input contains non-finite values"));
    }

    // Rotate the columns of the taller orientation.
    let transposed = a.cols() > a.rows();
    let b = if transposed { a.transpose() } else { a.clone() };
    let (mut cols, mut rot) = jacobi_columns(&b);

    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let top = norms[order[0]];
    let keep: Vec<usize> = if top > 0.0 {
        order.into_iter().filter(|&k| norms[k] > RANK_CUTOFF * top).collect()
    } else {
        Vec::new()
    };

    let s: Vec<f64> = keep.iter().map(|&k| norms[k]).collect();
    // Normalised rotated columns and the matching rotation columns.
    let left: Vec<Vec<f64>> = keep
        .iter()
        .map(|&k| {
            let n = norms[k];
            std::mem::take(&mut cols[k]).into_iter().map(|v| v / n).collect()
        })
        .collect();
    let right: Vec<Vec<f64>> = keep.iter().map(|&k| std::mem::take(&mut rot[k])).collect();

    // B = L·diag(s)·Rᵀ. For A = B this gives U = L, H = Rᵀ; for A = Bᵀ it
    // gives U = R, H = Lᵀ.
    let (u_cols, h_rows) = if transposed { (right, left) } else { (left, right) };
    let mut u_cols = u_cols;
    let mut h_rows = h_rows;
    for (u, h) in u_cols.iter_mut().zip(h_rows.iter_mut()) {
        let mut pivot = 0;
        for (i, v) in u.iter().enumerate() {
            if v.abs() > u[pivot].abs() {
                pivot = i;
            }
        }
        if u[pivot] < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
            h.iter_mut().for_each(|v| *v = -*v);
        }
    }

    let u = if u_cols.is_empty() {
        Matrix::zeros(a.rows(), 0)
    } else {
        Matrix::from_columns(&u_cols)?
    };
    let h = if h_rows.is_empty() {
        Matrix::zeros(0, a.cols())
    } else {
        Matrix::from_rows(&h_rows)?
    };
    Ok(Svd { u, s, h })
}

/// Orthogonalises the columns of `b` (m×n, m ≥ n) in place. Returns the
/// rotated columns `B·R` and the columns of the accumulated rotation `R`.
fn jacobi_columns(b: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = b.cols();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| b.col(j)).collect();
    let mut rot: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut rot, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (cols, rot)
}

fn rotate_pair(vs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vs.split_at_mut(q);
    let (vp, vq) = (&mut head[p], &mut tail[0]);
    for (a, b) in vp.iter_mut().zip(vq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Average ranks (1-based); tied values share the mean of their rank range.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Spearman rank-order correlation with average ranks for ties.
///
/// Returns 0 when either rank vector is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "spearman length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::invalid("spearman needs at least two values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spearman input contains non-finite values"));
    }
    Ok(pearson(&average_ranks(a), &average_ranks(b)))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    // sqrt(fl(s·s)) == s exactly, so identical rank vectors give exactly 1.
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}
