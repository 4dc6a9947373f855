//! Symmetric sparse matrices stored as their upper triangle.

use faer::Mat;

/// Symmetric matrix in compressed-row form holding entries with `row <= col`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from raw CSR parts. Columns in each row must be sorted and
    /// not smaller than the row index.
    pub fn from_csr(dim: usize, row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<f64>) -> Self {
        assert_eq!(row_ptr.len(), dim + 1);
        assert_eq!(cols.len(), vals.len());
        debug_assert!((0..dim).all(|r| cols[row_ptr[r]..row_ptr[r + 1]]
            .iter()
            .all(|&c| c as usize >= r)));
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Builds from `(row, col, value)` triplets; entries below the
    /// diagonal are mirrored and duplicates summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut items: Vec<(usize, usize, f64)> = triplets
            .iter()
            .map(|&(r, c, v)| if r <= c { (r, c, v) } else { (c, r, v) })
            .collect();
        items.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(items.len());
        let mut vals: Vec<f64> = Vec::with_capacity(items.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in items {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c as u32);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::from_csr(dim, row_ptr, cols, vals)
    }

    pub fn identity(dim: usize, scale: f64) -> Self {
        Self::from_csr(
            dim,
            (0..=dim).collect(),
            (0..dim as u32).collect(),
            vec![scale; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&(c as u32)) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.dim {
            let xr = x[r];
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                let v = self.vals[k];
                if c == r {
                    acc += v * xr;
                } else {
                    acc += v * x[c];
                    y[c] += v * xr;
                }
            }
            y[r] += acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    /// `<x|A|x>`.
    pub fn expectation(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                let w = if c == r { 1.0 } else { 2.0 };
                s += w * self.vals[k] * x[r] * x[c];
            }
        }
        s
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                m[(r, c)] = self.vals[k];
                m[(c, r)] = self.vals[k];
            }
        }
        m
    }

    /// Upper bound on the spectral radius (maximum absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        let mut rows = vec![0.0; self.dim];
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                let a = self.vals[k].abs();
                rows[r] += a;
                if c != r {
                    rows[c] += a;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Adds `shift` to every diagonal entry, inserting missing ones.
    pub fn add_diagonal(&self, shift: f64) -> Self {
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                trip.push((r, self.cols[k] as usize, self.vals[k]));
            }
            trip.push((r, r, shift));
        }
        Self::from_triplets(self.dim, &trip)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_dense() {
        let trip = [(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 1, 0.5), (2, 2, 1.0), (1, 2, 0.25)];
        let m = SparseSymMatrix::from_triplets(3, &trip);
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.get(2, 1), 0.75);
        let x = [1.0, -2.0, 0.5];
        let y = m.matvec(&x);
        let d = m.to_dense();
        for i in 0..3 {
            let yd: f64 = (0..3).map(|c| d[(i, c)] * x[c]).sum();
            assert!((y[i] - yd).abs() < 1e-14);
        }
        let e = m.expectation(&x);
        let ed: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((e - ed).abs() < 1e-14);
        assert!(m.norm_bound() >= 3.0);
    }

    #[test]
    fn diagonal_shift() {
        let m = SparseSymMatrix::from_triplets(2, &[(0, 1, 1.0)]);
        let s = m.add_diagonal(4.0);
        assert_eq!(s.get(0, 0), 4.0);
        assert_eq!(s.get(1, 1), 4.0);
        assert_eq!(s.get(1, 0), 1.0);
    }
}
