use crate::error::{Error, Result};

/// Row-major `n x p` observation matrix. Rows are observations, columns variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at row {}, column {}",
                k / p.max(1),
                k % p.max(1)
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            n,
            p,
            values: vec![0.0; n * p],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), p, values)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p.max(1)).take(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Returns `X * diag(scales)`.
    pub fn scale_columns(&self, scales: &[f64]) -> Result<Self> {
        if scales.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: scales.len(),
            });
        }
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(self.p) {
            for (x, c) in row.iter_mut().zip(scales) {
                *x *= c;
            }
        }
        Ok(out)
    }

    /// Row `k` of the result is row `order[k]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: order.len(),
            });
        }
        let mut seen = vec![false; self.n];
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            if i >= self.n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput(format!(
                    "row order is not a permutation (index {i})"
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Ok(Self { values, ..*self })
    }

    /// Copy of the matrix with the listed rows dropped.
    pub fn without_rows(&self, drop: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        let mut n = 0;
        for i in 0..self.n {
            if !drop.contains(&i) {
                values.extend_from_slice(self.row(i));
                n += 1;
            }
        }
        Self { n, p: self.p, values }
    }

    pub fn transpose(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.p {
            for i in 0..self.n {
                values.push(self.get(i, j));
            }
        }
        Self {
            n: self.p,
            p: self.n,
            values,
        }
    }

    /// Row-wise difference `self - other`, the paired-sample reduction.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.p != other.p {
            return Err(Error::InvalidInput(format!(
                "paired samples differ in shape: {}x{} vs {}x{}",
                self.n, self.p, other.n, other.p
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { values, ..*self })
    }

    /// Splits a `n x 2p` matrix into its left and right halves.
    pub fn split_columns(&self) -> Result<(Self, Self)> {
        if !self.p.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "cannot split {} columns into two equal halves",
                self.p
            )));
        }
        let half = self.p / 2;
        let mut left = Vec::with_capacity(self.n * half);
        let mut right = Vec::with_capacity(self.n * half);
        for row in self.rows() {
            left.extend_from_slice(&row[..half]);
            right.extend_from_slice(&row[half..]);
        }
        Ok((
            Self { n: self.n, p: half, values: left },
            Self { n: self.n, p: half, values: right },
        ))
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.p];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Column sample variances with denominator `n - 1`.
    pub fn column_variances(&self, means: &[f64]) -> Vec<f64> {
        let mut var = vec![0.0; self.p];
        for row in self.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(means) {
                let d = x - m;
                *v += d * d;
            }
        }
        let denom = (self.n as f64) - 1.0;
        var.iter_mut().for_each(|v| *v /= denom);
        var
    }
}
