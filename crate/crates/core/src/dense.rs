//! Dense symmetric eigendecomposition.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: Mat<f64>,
}

impl SymmetricEigen {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        let n = a.nrows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Mat::zeros(0, 0),
            });
        }
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NonConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| s[x].total_cmp(&s[y]));
        Ok(Self {
            values: order.iter().map(|&i| s[i]).collect(),
            vectors: Mat::from_fn(n, n, |r, c| u[(r, order[c])]),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.nrows()).map(|r| self.vectors[(r, i)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_symmetric() {
        let a = Mat::from_fn(3, 3, |i, j| [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, -1.0]][i][j]);
        let e = SymmetricEigen::new(&a).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        assert!((e.values[2] - 3.0).abs() < 1e-14);
        let v = e.vector(2);
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((v[0] - v[1]).abs() < 1e-14);
    }

    #[test]
    fn near_diagonal_arrow_residuals() {
        // a nearly tridiagonal matrix with tiny fill, as produced by Lanczos
        let n = 64;
        let a = Mat::from_fn(n, n, |i, j| {
            let d = (i as f64 * 0.37).sin() * 10.0;
            if i == j {
                d
            } else if i.abs_diff(j) == 1 {
                1.0 + 0.01 * (i + j) as f64
            } else {
                1e-16 * ((i * 7 + j * 13) % 5) as f64 * if i < j { 1.0 } else { 1.0 }
            }
        });
        let e = SymmetricEigen::new(&a).unwrap();
        for i in 0..n {
            let v = e.vector(i);
            let r: f64 = (0..n)
                .map(|row| {
                    let av: f64 = (0..n).map(|c| a[(row, c)] * v[c]).sum();
                    (av - e.values[i] * v[row]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-12, "{i}: {r}");
        }
    }
}
