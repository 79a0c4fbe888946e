//! Minimal dense linear algebra for the population calculators: row-major
//! matrices, LU solves and pairwise summation. Problem sizes here are tiny
//! (p <= ~10), so clarity beats throughput.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                dot(row, v)
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Solves `A x = b` by LU decomposition with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "solve: A is {}x{}, b has {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let mut lu = a.data.clone();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = lu[perm[k] * n + k].abs();
        for r in (k + 1)..n {
            let v = lu[perm[r] * n + k].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::Numerical("solve: singular matrix".into()));
        }
        perm.swap(k, piv);
        let pk = perm[k];
        for r in (k + 1)..n {
            let pr = perm[r];
            let f = lu[pr * n + k] / lu[pk * n + k];
            lu[pr * n + k] = f;
            for c in (k + 1)..n {
                lu[pr * n + c] -= f * lu[pk * n + c];
            }
        }
    }
    // forward substitution on permuted rows
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = x[perm[i]];
        for j in 0..i {
            s -= lu[perm[i] * n + j] * y[j];
        }
        y[i] = s;
    }
    // back substitution
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= lu[perm[i] * n + j] * x[j];
        }
        x[i] = s / lu[perm[i] * n + i];
    }
    Ok(x)
}

/// Inverse via `n` LU solves. Only used on tiny matrices.
pub fn inverse(a: &Mat) -> Result<Mat> {
    let n = a.rows;
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(a, &e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Pairwise summation: a fixed reduction order that is independent of
/// threading and more accurate than a running sum.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n if n <= 32 => v.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Slope and intercept of the least-squares line through `(x_i, y_i)`.
pub fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
