//! Small dense and banded solvers used by the filter constructions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{MssaError, Result};

/// Solves a general tridiagonal system with partial pivoting (the LAPACK `gtsv` scheme).
///
/// `sub[i] = A[i+1][i]`, `diag[i] = A[i][i]`, `sup[i] = A[i][i+1]`.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Err(MssaError::InvalidDimension("empty tridiagonal system".into()));
    }
    if rhs.len() != n {
        return Err(MssaError::DimensionMismatch { expected: n, got: rhs.len() });
    }
    if sub.len() + 1 != n || sup.len() + 1 != n {
        return Err(MssaError::DimensionMismatch { expected: n - 1, got: sub.len().min(sup.len()) });
    }
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    let singular = |i: usize| MssaError::Singular(format!("zero pivot at row {i} of tridiagonal system"));

    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(singular(i));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                // dl[i] now stores the fill-in on the second superdiagonal
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        return Err(singular(n - 1));
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(MssaError::Singular("non-finite tridiagonal solution".into()));
    }
    Ok(b)
}

/// Symmetric positive definite band matrix stored by its lower band.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bandwidth: usize,
    // lower[i][d] = A[i][i - d]
    lower: Vec<Vec<f64>>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bandwidth, lower: vec![vec![0.0; bandwidth + 1]; n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `value` to `A[i][j]` (and implicitly `A[j][i]`), `|i - j| <= bandwidth`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bandwidth);
        self.lower[r][r - c] += value;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bandwidth {
            0.0
        } else {
            self.lower[r][r - c]
        }
    }

    /// Banded Cholesky factorization followed by a forward/backward solve.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let p = self.bandwidth;
        if rhs.len() != n {
            return Err(MssaError::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let mut chol = vec![vec![0.0; p + 1]; n];
        let l = |chol: &Vec<Vec<f64>>, i: usize, j: usize| -> f64 {
            if i < j || i - j > p {
                0.0
            } else {
                chol[i][i - j]
            }
        };
        for i in 0..n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let mut s = self.get(i, j);
                for k in i.saturating_sub(p).max(j.saturating_sub(p))..j {
                    s -= l(&chol, i, k) * l(&chol, j, k);
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(MssaError::NotPositiveDefinite(format!("banded pivot {i} = {s}")));
                    }
                    chol[i][0] = s.sqrt();
                } else {
                    chol[i][i - j] = s / chol[j][0];
                }
            }
        }
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(p)..i {
                s -= l(&chol, i, k) * y[k];
            }
            y[i] = s / chol[i][0];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + p + 1).min(n) {
                s -= l(&chol, k, i) * y[k];
            }
            y[i] = s / chol[i][0];
        }
        Ok(y)
    }
}

/// Symmetric square root `S^{1/2} = V diag(sqrt(e)) V'` of a positive definite matrix.
pub fn symmetric_sqrt(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(matrix.clone());
    if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
        return Err(MssaError::NotPositiveDefinite(format!(
            "eigenvalues {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    let root = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}
