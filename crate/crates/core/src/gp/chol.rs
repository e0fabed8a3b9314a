//! Lower-triangular Cholesky factors with incremental bordering.
//!
//! The factor grows one row per observation: given L of the current matrix
//! and the new point's covariances k with diagonal kappa, solve L c = k,
//! set d = sqrt(kappa - c.c), and append the row [c, d]. No refactorization.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("matrix is not positive definite at pivot {pivot}")]
pub struct NotPositiveDefinite {
    pub pivot: usize,
}

/// Packed row-major lower triangle; row i occupies `i(i+1)/2 ..= i(i+1)/2 + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    data: Vec<f64>,
    n: usize,
}

impl Default for Cholesky {
    fn default() -> Self {
        Self::empty()
    }
}

impl Cholesky {
    pub fn empty() -> Self {
        Cholesky {
            data: Vec::new(),
            n: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[i * (i + 1) / 2 + j]
    }

    /// Batch factorization of a full symmetric matrix (row-major, square).
    pub fn factor(matrix: &[Vec<f64>]) -> Result<Self, NotPositiveDefinite> {
        let n = matrix.len();
        let mut chol = Cholesky::empty();
        chol.data.reserve(n * (n + 1) / 2);
        for i in 0..n {
            debug_assert_eq!(matrix[i].len(), n);
            for j in 0..=i {
                let mut s = matrix[i][j];
                for k in 0..j {
                    s -= chol.entry(i, k) * chol.entry(j, k);
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(NotPositiveDefinite { pivot: i });
                    }
                    chol.data.push(s.sqrt());
                } else {
                    chol.data.push(s / chol.entry(j, j));
                }
            }
            chol.n = i + 1;
        }
        Ok(chol)
    }

    /// Extends the factor by one row for a point with covariance vector
    /// `cov` against the existing points and self-covariance `diag`.
    /// Returns the squared new pivot, `diag` minus the explained part.
    pub fn border(&mut self, cov: &[f64], diag: f64) -> Result<f64, NotPositiveDefinite> {
        assert_eq!(cov.len(), self.n, "covariance vector length mismatch");
        let c = self.solve_lower(cov);
        let d2 = diag - c.iter().map(|x| x * x).sum::<f64>();
        if d2 <= 0.0 || !d2.is_finite() {
            return Err(NotPositiveDefinite { pivot: self.n });
        }
        self.data.extend_from_slice(&c);
        self.data.push(d2.sqrt());
        self.n += 1;
        Ok(d2)
    }

    /// Forward substitution: solves L x = b.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut s = b[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Backward substitution: solves Lᵀ x = b.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for j in i + 1..self.n {
                s -= self.entry(j, i) * x[j];
            }
            x[i] = s / self.entry(i, i);
        }
        x
    }

    /// Solves (L Lᵀ) x = b via the two triangular solves.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_transpose(&self.solve_lower(b))
    }
}
