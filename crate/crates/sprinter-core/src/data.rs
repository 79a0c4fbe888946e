//! Column-major design matrices and sample standardization.

use crate::error::{Error, Result};

/// Dense column-major matrix of main effects.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl ColMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        ColMatrix { data: vec![0.0; n_rows * n_cols], n_rows, n_cols }
    }

    /// Builds from a flat column-major buffer.
    pub fn from_flat(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Dimension(format!(
                "expected {} values for a {}x{} matrix, got {}",
                n_rows * n_cols,
                n_rows,
                n_cols,
                data.len()
            )));
        }
        Ok(ColMatrix { data, n_rows, n_cols })
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n_rows = cols.first().map_or(0, |c| c.len());
        let mut data = Vec::with_capacity(n_rows * cols.len());
        for c in cols {
            if c.len() != n_rows {
                return Err(Error::Dimension("columns of unequal length".into()));
            }
            data.extend_from_slice(c);
        }
        Ok(ColMatrix { data, n_rows, n_cols: cols.len() })
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n_rows + i] = v;
    }

    pub fn push_col(&mut self, col: &[f64]) -> Result<()> {
        if self.n_cols == 0 && self.n_rows == 0 {
            self.n_rows = col.len();
        }
        if col.len() != self.n_rows {
            return Err(Error::Dimension("pushed column of wrong length".into()));
        }
        self.data.extend_from_slice(col);
        self.n_cols += 1;
        Ok(())
    }

    /// Copies the given rows into a new matrix (used for CV folds).
    pub fn subset_rows(&self, rows: &[usize]) -> Self {
        let mut out = ColMatrix::zeros(rows.len(), self.n_cols);
        for j in 0..self.n_cols {
            let src = self.col(j);
            let dst = out.col_mut(j);
            for (k, &r) in rows.iter().enumerate() {
                dst[k] = src[r];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Per-column centering and scaling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations; constant columns get 1.0 so the
    /// centered column is identically zero rather than NaN.
    pub sds: Vec<f64>,
}

impl Standardization {
    pub fn compute(x: &ColMatrix) -> Self {
        let n = x.n_rows() as f64;
        let mut means = Vec::with_capacity(x.n_cols());
        let mut sds = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let col = x.col(j);
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|&u| (u - m) * (u - m)).sum::<f64>() / n;
            means.push(m);
            sds.push(if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
        }
        Standardization { means, sds }
    }

    pub fn apply(&self, x: &ColMatrix) -> ColMatrix {
        let mut out = x.clone();
        for j in 0..out.n_cols() {
            let m = self.means[j];
            let s = self.sds[j];
            for v in out.col_mut(j) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// A design matrix with its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: ColMatrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: ColMatrix, y: Vec<f64>) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows, response has {}",
                x.n_rows(),
                y.len()
            )));
        }
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.n_cols()
    }

    /// Sample-standardized copy of the design plus the metadata needed to
    /// map coefficients back to the original scale.
    pub fn standardized(&self) -> (ColMatrix, Standardization) {
        let std = Standardization::compute(&self.x);
        (std.apply(&self.x), std)
    }
}
