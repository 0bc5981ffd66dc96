//! Minimal sparse kernels for the P1 solver: CSR storage for matvecs and a
//! skyline Cholesky factorization for the Dirichlet systems.
//!
//! The ring-ordered meshes produced by `geometry::mesh` have small, slowly
//! varying profiles, which is what makes the skyline format effective here.

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form (full pattern stored).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from unsorted triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            acc += x[i] * row;
        }
        acc
    }
}

/// Cholesky factorization L L^T in skyline (profile) storage.
pub struct SkylineCholesky {
    n: usize,
    /// first stored column of each row
    first: Vec<usize>,
    /// row start offsets into `data`
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factor a symmetric positive definite CSR matrix.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let mut first = vec![0usize; n];
        for i in 0..n {
            let mut fc = i;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let c = a.col_idx[k];
                if c < fc {
                    fc = c;
                }
            }
            first[i] = fc;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offsets[n]];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let c = a.col_idx[k];
                if c <= i {
                    data[offsets[i] + (c - first[i])] = a.values[k];
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let start = fi.max(fj);
                let mut sum = data[offsets[i] + (j - fi)];
                // dot of row i and row j over columns [start, j)
                let oi = offsets[i] + (start - fi);
                let oj = offsets[j] + (start - fj);
                let len = j - start;
                for k in 0..len {
                    sum -= data[oi + k] * data[oj + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::SingularSystem { pivot: i });
                    }
                    data[offsets[i] + (j - fi)] = sum.sqrt();
                } else {
                    data[offsets[i] + (j - fi)] = sum / data[offsets[j] + (j - fj)];
                }
            }
        }
        Ok(Self {
            n,
            first,
            offsets,
            data,
        })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let oi = self.offsets[i];
            let mut sum = x[i];
            for (k, j) in (fi..i).enumerate() {
                sum -= self.data[oi + k] * x[j];
            }
            x[i] = sum / self.data[oi + (i - fi)];
        }
        // backward: L^T x = y, column sweep
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let oi = self.offsets[i];
            x[i] /= self.data[oi + (i - fi)];
            let xi = x[i];
            for (k, j) in (fi..i).enumerate() {
                x[j] -= self.data[oi + k] * xi;
            }
        }
        x
    }
}
