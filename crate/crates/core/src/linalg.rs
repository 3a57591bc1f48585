//! Dense Gaussian elimination for the small per-element systems.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        DenseMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Solves `self * x = rhs` by partial-pivot elimination on a copy.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.solve_with_reference(rhs, self.max_abs())
    }

    /// As [`DenseMatrix::solve`], but pivots are judged against `reference`,
    /// the magnitude of the terms the matrix was assembled from.
    pub fn solve_with_reference(&self, rhs: &[f64], reference: f64) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let norm = reference.max(self.max_abs());
        if norm == 0.0 {
            return Err(Error::Singular);
        }
        let tiny = norm * f64::EPSILON * 64.0 * n as f64;

        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap();
            if a[pivot * n + col].abs() <= tiny {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                b.swap(col, pivot);
            }
            let d = a[col * n + col];
            for row in col + 1..n {
                let factor = a[row * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[row * n + j] -= factor * a[col * n + j];
                }
                b[row] -= factor * b[col];
            }
        }

        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|j| a[row * n + j] * x[j]).sum();
            x[row] = (b[row] - s) / a[row * n + row];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}
