//! Compressed sparse row storage and a Jacobi-preconditioned conjugate
//! gradient solver for the symmetric positive-definite systems produced by
//! the finite-element assembly.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("index ({row}, {col}) out of range for a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not positive definite: diagonal entry {value} in row {row}")]
    NotSpd { row: usize, value: f64 },
    #[error("CG did not converge in {iterations} iterations (relative residual {relative_residual:e})")]
    NotConverged {
        iterations: usize,
        relative_residual: f64,
    },
}

/// Square sparse matrix in CSR layout. Column indices are strictly
/// increasing within every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets. Duplicate
    /// positions are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        for &(row, col, _) in triplets {
            if row >= n || col >= n {
                return Err(LinalgError::IndexOutOfRange { row, col, n });
            }
        }
        // Stable sort keeps summation order deterministic.
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry exists") += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows: n,
            n_cols: n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to the stored values; the sparsity pattern stays fixed.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position of `(row, col)` in the value array, if it is stored.
    pub fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_offsets[row];
        let end = self.row_offsets[row + 1];
        self.col_indices[start..end]
            .binary_search(&col)
            .ok()
            .map(|k| start + k)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for row in 0..self.n_rows {
            for k in self.row_offsets[row]..self.row_offsets[row + 1] {
                out.push((row, self.col_indices[k], self.values[k]));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self
            .to_triplets()
            .into_iter()
            .map(|(r, c, v)| (c, r, v))
            .collect();
        Self::from_triplets(self.n_rows, &triplets).expect("transpose keeps indices in range")
    }

    /// Largest absolute stored value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|` over all entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.to_triplets() {
            worst = worst.max((v - self.get(c, r)).abs());
        }
        worst
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_cols,
                actual: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n_rows,
                actual: y.len(),
            });
        }
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[row]..self.row_offsets[row + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64, LinalgError> {
        Ok(dot(x, &self.matvec(x)?))
    }

    /// `x^T A y`.
    pub fn bilinear_form(&self, x: &[f64], y: &[f64]) -> Result<f64, LinalgError> {
        Ok(dot(x, &self.matvec(y)?))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a - b`
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y + alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| yi + alpha * xi).collect()
}

/// Jacobi-preconditioned conjugate gradients.
///
/// Returns `x` with `‖Ax − b‖₂ ≤ rel_tol·‖b‖₂`. The residual is recomputed
/// from scratch whenever the recurrence claims convergence, so the bound
/// holds for the true residual and not only the recursively updated one.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>, LinalgError> {
    let n = a.n_rows();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut inv_diag = Vec::with_capacity(n);
    for (row, d) in a.diagonal().into_iter().enumerate() {
        if !(d > 0.0) {
            return Err(LinalgError::NotSpd { row, value: d });
        }
        inv_diag.push(1.0 / d);
    }

    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = rel_tol * b_norm;

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Breakdown: either converged exactly or the matrix is indefinite.
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= target {
            // Residual replacement before declaring success.
            a.matvec_into(&x, &mut ap)?;
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            if norm2(&r) <= target {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let true_res = norm2(&sub(b, &a.matvec(&x)?));
    if true_res <= target {
        return Ok(x);
    }
    Err(LinalgError::NotConverged {
        iterations: max_iter,
        relative_residual: true_res / b_norm,
    })
}
