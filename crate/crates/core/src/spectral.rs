//! The lag-one autocovariance generator `M`, its closed-form eigenpairs and the
//! Kronecker quadratic forms `b'(Σ⊗I)b` and `b'(Σ⊗M)b` on stacked filters.
//!
//! `M` is the `L×L` symmetric tridiagonal matrix with zero diagonal and `0.5` on
//! both off-diagonals, so that `b'Mb = Σ_k b_{k-1} b_k`. Its eigenvalues are
//! `cos(kπ/(L+1))` with sine eigenvectors; nothing here calls an iterative
//! eigensolver for `M` and `M` itself is never materialized.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{MssaError, Result};

#[derive(Debug, Clone)]
pub struct TridiagSpectrum {
    len: usize,
    eigenvalues: Vec<f64>,
    // eigenvectors[k][t], k = 0..L (eigenvalue order), t = 0..L
    eigenvectors: Vec<Vec<f64>>,
}

impl TridiagSpectrum {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(MssaError::InvalidDimension(format!("filter length must be >= 2, got {len}")));
        }
        let step = PI / (len as f64 + 1.0);
        // sum_j sin^2(j k pi / (L+1)) = (L+1)/2 for every k
        let norm = (2.0 / (len as f64 + 1.0)).sqrt();
        let eigenvalues = (1..=len).map(|k| (k as f64 * step).cos()).collect();
        let eigenvectors = (1..=len)
            .map(|k| (1..=len).map(|j| norm * ((j * k) as f64 * step).sin()).collect())
            .collect();
        Ok(Self { len, eigenvalues, eigenvectors })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Eigenvalues `λ_1 > λ_2 > ... > λ_L`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        &self.eigenvectors[k]
    }

    /// Largest attainable lag-one autocorrelation of a length-L filter, `cos(π/(L+1))`.
    pub fn rho_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `M x` through the tridiagonal stencil.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|t| {
                let left = if t > 0 { x[t - 1] } else { 0.0 };
                let right = if t + 1 < n { x[t + 1] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// `x' M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        lag_one_bilinear(x, y)
    }

    /// Coordinates `v_k' x` of `x` in the eigenbasis (a discrete sine transform).
    pub fn sine_transform(&self, x: &[f64]) -> Vec<f64> {
        self.eigenvectors.iter().map(|v| dot(v, x)).collect()
    }

    /// Inverse of [`Self::sine_transform`].
    pub fn inverse_sine_transform(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (c, v) in coeffs.iter().zip(&self.eigenvectors) {
            for (o, vt) in out.iter_mut().zip(v) {
                *o += c * vt;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x' M y` with the 0.5 off-diagonal stencil; vectors may be any common length.
pub(crate) fn lag_one_bilinear(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let mut s = 0.0;
    for t in 1..n {
        s += x[t - 1] * y[t] + x[t] * y[t - 1];
    }
    0.5 * s
}

/// Innovation covariance `Σ` with its eigen-decomposition.
#[derive(Debug, Clone)]
pub struct NoiseCovariance {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl NoiseCovariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(MssaError::InvalidDimension(format!(
                "covariance must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.abs().max().max(1.0);
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 * scale {
            return Err(MssaError::NotPositiveDefinite("matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        if let Some(e) = eig.eigenvalues.iter().find(|&&e| e <= 0.0) {
            return Err(MssaError::NotPositiveDefinite(format!("eigenvalue {e} is not strictly positive")));
        }
        Ok(Self { eigenvalues: eig.eigenvalues.as_slice().to_vec(), eigenvectors: eig.eigenvectors, matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(MssaError::InvalidDimension("covariance rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }
}

/// Filter weights for one output, stacked series by series: block `j` holds the
/// `L` coefficients applied to input series `j` (lags `0..L`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedFilter {
    series: usize,
    len: usize,
    data: Vec<f64>,
}

impl StackedFilter {
    pub fn new(series: usize, len: usize, data: Vec<f64>) -> Result<Self> {
        if series == 0 || len == 0 {
            return Err(MssaError::InvalidDimension("stacked filter needs series >= 1 and len >= 1".into()));
        }
        if data.len() != series * len {
            return Err(MssaError::DimensionMismatch { expected: series * len, got: data.len() });
        }
        Ok(Self { series, len, data })
    }

    pub fn zeros(series: usize, len: usize) -> Self {
        Self { series, len, data: vec![0.0; series * len] }
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let len = blocks.first().map(Vec::len).unwrap_or(0);
        if blocks.iter().any(|b| b.len() != len) {
            return Err(MssaError::InvalidDimension("all blocks must share one length".into()));
        }
        Self::new(blocks.len(), len, blocks.concat())
    }

    pub fn series(&self) -> usize {
        self.series
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.data[j * self.len..(j + 1) * self.len]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.len..(j + 1) * self.len]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.len)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { series: self.series, len: self.len, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn euclidean_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// Cosine of the angle between two stacked vectors (Euclidean metric).
    pub fn direction_cosine(&self, other: &Self) -> f64 {
        dot(&self.data, &other.data) / (self.euclidean_norm() * other.euclidean_norm())
    }

    fn check_against(&self, sigma: &NoiseCovariance) -> Result<()> {
        if self.series != sigma.dim() {
            return Err(MssaError::DimensionMismatch { expected: sigma.dim(), got: self.series });
        }
        Ok(())
    }

    fn check_pair(&self, other: &Self) -> Result<()> {
        if self.series != other.series || self.len != other.len {
            return Err(MssaError::DimensionMismatch {
                expected: self.series * self.len,
                got: other.series * other.len,
            });
        }
        Ok(())
    }
}

/// `a'(Σ⊗I)b = Σ_{j,l} σ_jl a_j'b_l`.
pub fn cross_form_i(a: &StackedFilter, b: &StackedFilter, sigma: &NoiseCovariance) -> Result<f64> {
    a.check_against(sigma)?;
    a.check_pair(b)?;
    let n = a.series;
    let mut s = 0.0;
    for j in 0..n {
        for l in 0..n {
            let w = sigma.get(j, l);
            if w != 0.0 {
                s += w * dot(a.block(j), b.block(l));
            }
        }
    }
    Ok(s)
}

/// `a'(Σ⊗M)b = Σ_{j,l} σ_jl a_j'M b_l`.
pub fn cross_form_m(a: &StackedFilter, b: &StackedFilter, sigma: &NoiseCovariance) -> Result<f64> {
    a.check_against(sigma)?;
    a.check_pair(b)?;
    let n = a.series;
    let mut s = 0.0;
    for j in 0..n {
        for l in 0..n {
            let w = sigma.get(j, l);
            if w != 0.0 {
                s += w * lag_one_bilinear(a.block(j), b.block(l));
            }
        }
    }
    Ok(s)
}

/// Variance `b'(Σ⊗I)b` of the filter output under white-noise input.
pub fn quad_form_i(b: &StackedFilter, sigma: &NoiseCovariance) -> Result<f64> {
    cross_form_i(b, b, sigma)
}

/// Lag-one autocovariance `b'(Σ⊗M)b` of the filter output under white-noise input.
pub fn quad_form_m(b: &StackedFilter, sigma: &NoiseCovariance) -> Result<f64> {
    cross_form_m(b, b, sigma)
}
