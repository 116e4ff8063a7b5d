//! M-SSA solver: maximizes the covariance `γ'(Σ⊗I)b` with the MSE predictor `γ`
//! subject to `b'(Σ⊗I)b = l` and `b'(Σ⊗M)b = ρ l`.
//!
//! The optimum lies on the one-parameter family `b(ν) = D (I⊗(2M - νI))^{-1} γ`
//! with `sign(D) = -sign(ν)`. `ν` is found by bisection on `u = 1/ν` over the
//! outer branches `|ν| > 2ρ_max`, where `ρ(ν)` is monotone.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{MssaError, Result};
use crate::linalg::solve_tridiagonal;
use crate::metrics::ht_from_acf;
use crate::spectral::{cross_form_i, quad_form_i, quad_form_m, NoiseCovariance, StackedFilter, TridiagSpectrum};

const SUPPORT_EPS: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200;
const EIGEN_GUARD: f64 = 1e-9;

/// Coordinates `w_kj` of a stacked vector in the basis `v_σj ⊗ v_k`.
#[derive(Debug, Clone)]
pub struct SpectralWeights {
    series: usize,
    len: usize,
    // w[k * series + j]
    w: Vec<f64>,
    sigma_eigenvalues: Vec<f64>,
    sigma_eigenvectors: Vec<DVector<f64>>,
    eps: f64,
    missing: Option<usize>,
}

impl SpectralWeights {
    pub fn new(gamma: &StackedFilter, sigma: &NoiseCovariance, spectrum: &TridiagSpectrum) -> Result<Self> {
        check_shapes(gamma, sigma, spectrum)?;
        let norm = gamma.euclidean_norm();
        if norm == 0.0 {
            return Err(MssaError::ZeroTarget);
        }
        let n = gamma.series();
        let len = gamma.len();
        let sines: Vec<Vec<f64>> = gamma.blocks().map(|b| spectrum.sine_transform(b)).collect();
        let vecs: Vec<DVector<f64>> = (0..n).map(|j| sigma.eigenvector(j)).collect();
        let mut w = vec![0.0; n * len];
        for k in 0..len {
            for (j, v) in vecs.iter().enumerate() {
                w[k * n + j] = (0..n).map(|l| v[l] * sines[l][k]).sum();
            }
        }
        let eps = SUPPORT_EPS * norm;
        let missing = (0..len).find(|&k| w[k * n..(k + 1) * n].iter().map(|v| v.abs()).sum::<f64>() <= eps);
        Ok(Self {
            series: n,
            len,
            w,
            sigma_eigenvalues: sigma.eigenvalues().to_vec(),
            sigma_eigenvectors: vecs,
            eps,
            missing,
        })
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.w[k * self.series + j]
    }

    pub fn has_complete_support(&self) -> bool {
        self.missing.is_none()
    }

    pub fn is_missing(&self, k: usize) -> bool {
        self.w[k * self.series..(k + 1) * self.series].iter().map(|v| v.abs()).sum::<f64>() <= self.eps
    }

    /// First eigen-direction `k` (0-based) without weight, if any.
    pub fn missing_direction(&self) -> Option<usize> {
        self.missing
    }

    /// `w̃_k² = Σ_j σ̃_j w_kj²`.
    pub fn energy(&self, k: usize) -> f64 {
        (0..self.series).map(|j| self.sigma_eigenvalues[j] * self.get(k, j).powi(2)).sum()
    }

    /// `γ'(Σ⊗I)γ = Σ_k w̃_k²`.
    pub fn total_energy(&self) -> f64 {
        (0..self.len).map(|k| self.energy(k)).sum()
    }

    /// Stacked vector with coordinates `c_kj` in the basis `v_σj ⊗ v_k`.
    fn synthesize(&self, spectrum: &TridiagSpectrum, coeff: impl Fn(usize, usize) -> f64) -> StackedFilter {
        let n = self.series;
        let mut out = StackedFilter::zeros(n, self.len);
        for l in 0..n {
            let sine: Vec<f64> = (0..self.len)
                .map(|k| (0..n).map(|j| coeff(k, j) * self.sigma_eigenvectors[j][l]).sum())
                .collect();
            out.block_mut(l).copy_from_slice(&spectrum.inverse_sine_transform(&sine));
        }
        out
    }

    pub fn reconstruct(&self, spectrum: &TridiagSpectrum) -> StackedFilter {
        self.synthesize(spectrum, |k, j| self.get(k, j))
    }
}

fn check_shapes(gamma: &StackedFilter, sigma: &NoiseCovariance, spectrum: &TridiagSpectrum) -> Result<()> {
    if gamma.series() != sigma.dim() {
        return Err(MssaError::DimensionMismatch { expected: sigma.dim(), got: gamma.series() });
    }
    if gamma.len() != spectrum.len() {
        return Err(MssaError::DimensionMismatch { expected: spectrum.len(), got: gamma.len() });
    }
    Ok(())
}

pub fn spectral_weights(gamma: &StackedFilter, sigma: &NoiseCovariance, spectrum: &TridiagSpectrum) -> Result<SpectralWeights> {
    SpectralWeights::new(gamma, sigma, spectrum)
}

fn d_sign(nu: f64) -> f64 {
    if nu > 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn guard_nu(nu: f64, spectrum: &TridiagSpectrum) -> Result<()> {
    if !nu.is_finite() {
        return Err(MssaError::InvalidParameter(format!("nu must be finite, got {nu}")));
    }
    let tol = EIGEN_GUARD * nu.abs().max(1.0);
    if let Some(l) = spectrum.eigenvalues().iter().find(|&&l| (nu - 2.0 * l).abs() < tol) {
        return Err(MssaError::Singular(format!("nu = {nu} is within {tol:.1e} of 2 lambda = {}", 2.0 * l)));
    }
    Ok(())
}

/// `(2M - νI)^{-1}` applied to every block.
fn apply_resolvent(x: &StackedFilter, nu: f64, spectrum: &TridiagSpectrum) -> Result<StackedFilter> {
    guard_nu(nu, spectrum)?;
    let len = spectrum.len();
    let off = vec![1.0; len - 1];
    let diag = vec![-nu; len];
    let mut out = StackedFilter::zeros(x.series(), len);
    for j in 0..x.series() {
        let sol = solve_tridiagonal(&off, &diag, &off, x.block(j))?;
        out.block_mut(j).copy_from_slice(&sol);
    }
    Ok(out)
}

/// `b(ν)`: per-block solves of `(2M - νI) b_j = sign(D) γ_j`, `sign(D) = -sign(ν)`.
pub fn solve_b_of_nu(gamma: &StackedFilter, nu: f64, spectrum: &TridiagSpectrum) -> Result<StackedFilter> {
    if gamma.len() != spectrum.len() {
        return Err(MssaError::DimensionMismatch { expected: spectrum.len(), got: gamma.len() });
    }
    Ok(apply_resolvent(gamma, nu, spectrum)?.scaled(d_sign(nu)))
}

/// `ρ(ν) = Σ_k λ_k w̃_k²/(2λ_k-ν)² / Σ_k w̃_k²/(2λ_k-ν)²`.
pub fn rho_of_nu(weights: &SpectralWeights, nu: f64, spectrum: &TridiagSpectrum) -> Result<f64> {
    guard_nu(nu, spectrum)?;
    Ok(rho_unchecked(weights, nu, spectrum))
}

fn rho_unchecked(weights: &SpectralWeights, nu: f64, spectrum: &TridiagSpectrum) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &l) in spectrum.eigenvalues().iter().enumerate() {
        let e = weights.energy(k) / (2.0 * l - nu).powi(2);
        num += l * e;
        den += e;
    }
    num / den
}

/// Correlation of `b(ν)` with the MSE predictor output.
fn mse_correlation_unchecked(weights: &SpectralWeights, nu: f64, spectrum: &TridiagSpectrum) -> f64 {
    let (mut cov, mut var) = (0.0, 0.0);
    for (k, &l) in spectrum.eigenvalues().iter().enumerate() {
        let e = weights.energy(k);
        cov += e / (2.0 * l - nu);
        var += e / (2.0 * l - nu).powi(2);
    }
    d_sign(nu) * cov / (var * weights.total_energy()).sqrt()
}

/// `ρ_MSE = γ'(Σ⊗M)γ / γ'(Σ⊗I)γ`, the limit of `ρ(ν)` for `|ν| → ∞`.
pub fn rho_mse(weights: &SpectralWeights, spectrum: &TridiagSpectrum) -> f64 {
    let num: f64 = spectrum.eigenvalues().iter().enumerate().map(|(k, l)| l * weights.energy(k)).sum();
    num / weights.total_energy()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    Acf,
    HoldingTime,
}

/// Smoothness constraint on one target, with length scale `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HtConstraint {
    pub mode: ConstraintMode,
    pub value: f64,
    pub length: f64,
}

impl HtConstraint {
    pub fn acf(rho: f64) -> Self {
        Self { mode: ConstraintMode::Acf, value: rho, length: 1.0 }
    }

    pub fn holding_time(ht: f64) -> Self {
        Self { mode: ConstraintMode::HoldingTime, value: ht, length: 1.0 }
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }

    /// Lag-one autocorrelation implied by the constraint.
    pub fn rho(&self) -> Result<f64> {
        match self.mode {
            ConstraintMode::Acf => {
                if self.value.is_finite() && self.value.abs() < 1.0 {
                    Ok(self.value)
                } else {
                    Err(MssaError::InvalidParameter(format!("autocorrelation {} outside (-1, 1)", self.value)))
                }
            }
            ConstraintMode::HoldingTime => {
                if self.value > 1.0 && self.value.is_finite() {
                    Ok((std::f64::consts::PI / self.value).cos())
                } else {
                    Err(MssaError::InvalidParameter(format!("holding time {} must exceed 1", self.value)))
                }
            }
        }
    }

    fn validate_length(&self) -> Result<()> {
        if self.length > 0.0 && self.length.is_finite() {
            Ok(())
        } else {
            Err(MssaError::InvalidParameter(format!("length constraint {} must be positive", self.length)))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MssaSolution {
    pub b: StackedFilter,
    /// `±∞` for the MSE embedding, `±2ρ_max` for boundary solutions.
    pub nu: f64,
    pub d_sign: f64,
    pub scale: f64,
    pub length: f64,
    pub realized_acf: f64,
    pub realized_ht: f64,
    /// `γ'(Σ⊗I)b`.
    pub objective: f64,
    /// Correlation with the MSE predictor output.
    pub target_correlation: f64,
    pub rho_mse: f64,
    pub is_boundary: bool,
    pub is_degenerate_mse: bool,
    /// Whether `γ` has weight in every eigen-direction of `M`.
    pub complete_support: bool,
}

impl MssaSolution {
    /// Correlation with a target whose variance is `target_var`.
    pub fn correlation_with_target(&self, target_var: f64) -> f64 {
        self.objective / (self.length * target_var).sqrt()
    }

    fn assemble(
        b: StackedFilter,
        nu: f64,
        d_sign: f64,
        scale: f64,
        length: f64,
        gamma: &StackedFilter,
        sigma: &NoiseCovariance,
        rho_mse: f64,
    ) -> Result<Self> {
        let var = quad_form_i(&b, sigma)?;
        let acf = quad_form_m(&b, sigma)? / var;
        let objective = cross_form_i(gamma, &b, sigma)?;
        if objective <= 1e-12 * (var * quad_form_i(gamma, sigma)?).sqrt() {
            return Err(MssaError::RootSearch(format!("objective {objective:e} is not positive")));
        }
        let target_correlation = objective / (var * quad_form_i(gamma, sigma)?).sqrt();
        Ok(Self {
            b,
            nu,
            d_sign,
            scale,
            length,
            realized_acf: acf,
            realized_ht: ht_from_acf(acf).unwrap_or(f64::INFINITY),
            objective,
            target_correlation,
            rho_mse,
            is_boundary: false,
            is_degenerate_mse: false,
            complete_support: true,
        })
    }

    /// Distribution of `b` when `γ ~ (μ_γ, Σ_γ)` and `ν`, `D = d_sign·scale` are held fixed.
    pub fn estimator_distribution(
        &self,
        mu_gamma: &StackedFilter,
        sigma_gamma: &DMatrix<f64>,
        spectrum: &TridiagSpectrum,
    ) -> Result<(StackedFilter, DMatrix<f64>)> {
        estimator_distribution(mu_gamma, sigma_gamma, self.nu, self.d_sign * self.scale, spectrum)
    }
}

fn mse_embedding(
    gamma: &StackedFilter,
    sigma: &NoiseCovariance,
    length: f64,
    rho_mse: f64,
) -> Result<MssaSolution> {
    let scale = (length / quad_form_i(gamma, sigma)?).sqrt();
    let mut sol =
        MssaSolution::assemble(gamma.scaled(scale), f64::INFINITY, 1.0, scale, length, gamma, sigma, rho_mse)?;
    sol.is_degenerate_mse = true;
    Ok(sol)
}

/// Bisection for an increasing function on the open interval `(lo, hi)`; endpoints
/// are never evaluated.
fn bisect_increasing(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (0.5 * (lo + hi), f64::INFINITY);
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let err = f(mid) - target;
        if err.abs() < best.1.abs() {
            best = (mid, err);
        }
        if err == 0.0 {
            break;
        }
        if err < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Maximizes the covariance with the MSE predictor `γ` (one target) under the
/// smoothness constraint.
pub fn solve_mssa(
    gamma: &StackedFilter,
    sigma: &NoiseCovariance,
    spectrum: &TridiagSpectrum,
    constraint: &HtConstraint,
) -> Result<MssaSolution> {
    check_shapes(gamma, sigma, spectrum)?;
    constraint.validate_length()?;
    if gamma.series() * gamma.len() <= 2 {
        return Err(MssaError::InvalidDimension("the stacked filter needs more than two coefficients".into()));
    }
    let rho = constraint.rho()?;
    let rho_max = spectrum.rho_max();
    if rho.abs() >= rho_max {
        return Err(MssaError::NoSolution { rho: rho.abs(), rho_max });
    }
    let weights = SpectralWeights::new(gamma, sigma, spectrum)?;
    let r_mse = rho_mse(&weights, spectrum);
    if (rho - r_mse).abs() < DEGENERATE_TOL {
        return mse_embedding(gamma, sigma, constraint.length, r_mse);
    }
    let smoothing = rho > r_mse;
    // with the branch's extreme eigen-direction unsupported, rho(nu) only reaches the
    // eigenvalue of the outermost supported direction
    let reach = branch_reach(&weights, spectrum, smoothing);
    if (smoothing && rho >= reach) || (!smoothing && rho <= reach) {
        return Err(MssaError::IncompleteSupport { index: if smoothing { 1 } else { spectrum.len() } });
    }
    let u_edge = 1.0 / (2.0 * rho_max);
    let (lo, hi) = if smoothing { (0.0, u_edge) } else { (-u_edge, 0.0) };
    let (u, err) = bisect_increasing(lo, hi, rho, |u| rho_unchecked(&weights, 1.0 / u, spectrum));
    if err.abs() > ROOT_TOL {
        return Err(MssaError::RootSearch(format!(
            "no root on the outer branch: best |rho(nu) - rho| = {:.3e}",
            err.abs()
        )));
    }
    let nu = 1.0 / u;
    let raw = solve_b_of_nu(gamma, nu, spectrum)?;
    let scale = (constraint.length / quad_form_i(&raw, sigma)?).sqrt();
    let mut sol =
        MssaSolution::assemble(raw.scaled(scale), nu, d_sign(nu), scale, constraint.length, gamma, sigma, r_mse)?;
    sol.complete_support = weights.has_complete_support();
    Ok(sol)
}

/// Limit of `ρ(ν)` at the edge of the branch: the eigenvalue of the first supported
/// eigen-direction counted from that end of the spectrum.
fn branch_reach(weights: &SpectralWeights, spectrum: &TridiagSpectrum, smoothing: bool) -> f64 {
    let supported = |k: &usize| weights.energy(*k) > 0.0 && !weights.is_missing(*k);
    let k = if smoothing {
        (0..spectrum.len()).find(supported)
    } else {
        (0..spectrum.len()).rev().find(supported)
    }
    .expect("non-zero gamma has some support");
    spectrum.eigenvalues()[k]
}

/// Solves every output row of a convolved target `(Γ·Ξ)` with its own constraint.
pub fn solve_mssa_rows(
    rows: &[StackedFilter],
    sigma: &NoiseCovariance,
    spectrum: &TridiagSpectrum,
    constraints: &[HtConstraint],
) -> Result<Vec<MssaSolution>> {
    if rows.len() != constraints.len() {
        return Err(MssaError::DimensionMismatch { expected: rows.len(), got: constraints.len() });
    }
    rows.iter().zip(constraints).map(|(g, c)| solve_mssa(g, sigma, spectrum, c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Top,
    Bottom,
}

/// Solution for `ρ = ±ρ_max`: the projection of `γ` onto the extreme eigen-direction of `M`.
pub fn solve_boundary(
    gamma: &StackedFilter,
    sigma: &NoiseCovariance,
    spectrum: &TridiagSpectrum,
    which: Boundary,
    length: f64,
) -> Result<MssaSolution> {
    let weights = SpectralWeights::new(gamma, sigma, spectrum)?;
    let k = match which {
        Boundary::Top => 0,
        Boundary::Bottom => spectrum.len() - 1,
    };
    let energy = weights.energy(k);
    let mass: f64 = (0..weights.series).map(|j| weights.get(k, j).abs()).sum();
    if mass <= SUPPORT_EPS * gamma.euclidean_norm() {
        return Err(MssaError::IncompleteSupport { index: k + 1 });
    }
    if !(length > 0.0) {
        return Err(MssaError::InvalidParameter(format!("length constraint {length} must be positive")));
    }
    let scale = (length / energy).sqrt();
    let b = weights.synthesize(spectrum, |kk, j| if kk == k { scale * weights.get(k, j) } else { 0.0 });
    let (nu, sign) = match which {
        Boundary::Top => (2.0 * spectrum.rho_max(), -1.0),
        Boundary::Bottom => (-2.0 * spectrum.rho_max(), 1.0),
    };
    let mut sol = MssaSolution::assemble(b, nu, sign, scale, length, gamma, sigma, rho_mse(&weights, spectrum))?;
    sol.is_boundary = true;
    sol.complete_support = weights.has_complete_support();
    Ok(sol)
}

/// Maximizes the lag-one autocorrelation subject to a fixed correlation `rho_yz` with the
/// target, searching the smoothing branch `ν > 2ρ_max`. `target_var` defaults to
/// `γ'(Σ⊗I)γ`, i.e. correlation with the MSE predictor.
pub fn solve_dual(
    gamma: &StackedFilter,
    sigma: &NoiseCovariance,
    spectrum: &TridiagSpectrum,
    rho_yz: f64,
    target_var: Option<f64>,
    length: f64,
) -> Result<MssaSolution> {
    check_shapes(gamma, sigma, spectrum)?;
    let weights = SpectralWeights::new(gamma, sigma, spectrum)?;
    if weights.is_missing(0) {
        return Err(MssaError::IncompleteSupport { index: 1 });
    }
    let gvar = weights.total_energy();
    let ratio = (gvar / target_var.unwrap_or(gvar)).sqrt();
    let upper = ratio;
    let lower = ratio * weights.energy(0).sqrt() / gvar.sqrt();
    let r_mse = rho_mse(&weights, spectrum);
    if (rho_yz - upper).abs() < DEGENERATE_TOL {
        return mse_embedding(gamma, sigma, length, r_mse);
    }
    if !(rho_yz > lower && rho_yz < upper) {
        return Err(MssaError::InfeasibleCorrelation { value: rho_yz, lower, upper });
    }
    let u_edge = 1.0 / (2.0 * spectrum.rho_max());
    // correlation decreases in u on (0, u_edge)
    let (u, err) =
        bisect_increasing(0.0, u_edge, -rho_yz, |u| -ratio * mse_correlation_unchecked(&weights, 1.0 / u, spectrum));
    if err.abs() > ROOT_TOL {
        return Err(MssaError::RootSearch(format!("dual search stalled at |error| = {:.3e}", err.abs())));
    }
    let nu = 1.0 / u;
    let raw = solve_b_of_nu(gamma, nu, spectrum)?;
    let scale = (length / quad_form_i(&raw, sigma)?).sqrt();
    let mut sol = MssaSolution::assemble(raw.scaled(scale), nu, d_sign(nu), scale, length, gamma, sigma, r_mse)?;
    sol.complete_support = weights.has_complete_support();
    Ok(sol)
}

/// Mean and covariance of `b = D (I⊗(2M - νI))^{-1} γ` for random `γ ~ (μ_γ, Σ_γ)`.
pub fn estimator_distribution(
    mu_gamma: &StackedFilter,
    sigma_gamma: &DMatrix<f64>,
    nu: f64,
    d: f64,
    spectrum: &TridiagSpectrum,
) -> Result<(StackedFilter, DMatrix<f64>)> {
    let dim = mu_gamma.series() * mu_gamma.len();
    if sigma_gamma.shape() != (dim, dim) {
        return Err(MssaError::DimensionMismatch { expected: dim, got: sigma_gamma.nrows() });
    }
    if !nu.is_finite() {
        // MSE embedding: the map is a scalar multiple of the identity
        return Ok((mu_gamma.scaled(d), sigma_gamma * (d * d)));
    }
    let mean = apply_resolvent(mu_gamma, nu, spectrum)?.scaled(d);
    let (series, len) = (mu_gamma.series(), mu_gamma.len());
    let map_columns = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let col = StackedFilter::new(series, len, m.column(c).iter().copied().collect())?;
            out.set_column(c, &DVector::from_vec(apply_resolvent(&col, nu, spectrum)?.into_vec()));
        }
        Ok(out)
    };
    // T Σ_γ T with T symmetric: map columns, transpose, map columns again
    let half = map_columns(sigma_gamma)?;
    let full = map_columns(&half.transpose())?;
    let cov = (&full + full.transpose()) * (0.5 * d * d);
    Ok((mean, cov))
}
