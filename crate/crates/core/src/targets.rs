//! Target filters (allpass shifts, Whittaker-Henderson / Hodrick-Prescott trends)
//! and the benchmark predictors the M-SSA filters are compared with.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MssaError, Result};
use crate::linalg::BandedSpd;
use crate::processes::{convolve, deconvolve, LaggedFilter, MaExpansion};
use crate::spectral::NoiseCovariance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    AllpassShift,
    HpTwoSided,
    Identity,
    Custom,
}

/// Target `z_{t+δ} = Σ_k Γ_k x_{t+δ-k}`. `delta > 0` forecasts, `0` nowcasts, `< 0` backcasts.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub delta: i64,
    pub filter: LaggedFilter,
    pub lambda: Option<f64>,
    pub diff_order: Option<usize>,
}

impl TargetSpec {
    pub fn custom(filter: LaggedFilter, delta: i64) -> Self {
        Self { kind: TargetKind::Custom, delta, filter, lambda: None, diff_order: None }
    }

    pub fn dim(&self) -> usize {
        self.filter.n_out()
    }

    pub fn with_delta(mut self, delta: i64) -> Self {
        self.delta = delta;
        self
    }

    /// Scalar target weights `γ_k`, for univariate or diagonal targets (entry `[0,0]`).
    pub fn scalar_weights(&self) -> Vec<f64> {
        self.filter.coeffs().iter().map(|c| c[(0, 0)]).collect()
    }

    /// Applies a univariate target to each of `n` series: `Γ_k = γ_k I_n`.
    pub fn diagonal(&self, n: usize) -> Result<Self> {
        if self.dim() != 1 {
            return Err(MssaError::InvalidDimension("only univariate targets can be spread diagonally".into()));
        }
        let filter = LaggedFilter::diagonal(n, self.filter.start(), &self.scalar_weights())?;
        Ok(Self { filter, ..self.clone() })
    }

    /// Causal innovation weights `(Γ·Ξ)_{j+δ}`, `j = 0..len`.
    pub fn convolved(&self, xi: &MaExpansion, len: usize) -> Result<MaExpansion> {
        convolve(&self.filter, xi, self.delta, len)
    }

    /// `E[z_it²] = Σ_k ((Γ·Ξ)_k Σ (Γ·Ξ)_k')_{ii}` over all lags, acausal ones included.
    pub fn variances(&self, xi: &MaExpansion, sigma: &NoiseCovariance) -> Result<Vec<f64>> {
        let span = self.filter.coeffs().len() + xi.len() - 1;
        let full = convolve(&self.filter, xi, self.filter.start(), span)?;
        let mut var = vec![0.0; self.dim()];
        for c in full.coeffs() {
            let cov = c * sigma.matrix() * c.transpose();
            for (i, v) in var.iter_mut().enumerate() {
                *v += cov[(i, i)];
            }
        }
        Ok(var)
    }
}

/// Row `row` of the Whittaker-Henderson smoother `(I + λ K'K)^{-1}` on a window of
/// `window` points, `K` the `diff_order`-th difference matrix. Entry `s` weights `x_s`.
pub fn whittaker_row(lambda: f64, diff_order: usize, window: usize, row: usize) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(MssaError::InvalidParameter(format!("smoothing parameter must be positive, got {lambda}")));
    }
    if window <= diff_order || row >= window {
        return Err(MssaError::InvalidDimension(format!(
            "window {window} too short for difference order {diff_order} (row {row})"
        )));
    }
    let stencil = difference_stencil(diff_order);
    let mut a = BandedSpd::zeros(window, diff_order);
    for i in 0..window {
        a.add(i, i, 1.0);
    }
    for r in 0..window - diff_order {
        for (i, ci) in stencil.iter().enumerate() {
            for (j, cj) in stencil.iter().enumerate().take(i + 1) {
                let v = lambda * ci * cj;
                if i == j {
                    a.add(r + i, r + i, v);
                } else {
                    a.add(r + i, r + j, v);
                }
            }
        }
    }
    let mut e = vec![0.0; window];
    e[row] = 1.0;
    a.solve(&e)
}

/// Coefficients of `(1 - B)^d` in increasing powers of `B`, reversed to act on `x_r..x_{r+d}`.
fn difference_stencil(d: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..d {
        let mut next = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] -= v;
            next[i + 1] += v;
        }
        c = next;
    }
    c
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    w
}

/// Symmetric HP(λ) trend filter on lags `-(L-1)/2..=(L-1)/2`: the center row of the
/// smoother on a window of `L` points, normalized to unit sum.
pub fn hp_two_sided(lambda: f64, len: usize) -> Result<TargetSpec> {
    hp_two_sided_windowed(lambda, len, len)
}

/// As [`hp_two_sided`] but taken from the center row of a longer window and then
/// truncated to `L` lags.
pub fn hp_two_sided_windowed(lambda: f64, len: usize, window: usize) -> Result<TargetSpec> {
    if len % 2 == 0 {
        return Err(MssaError::InvalidDimension(format!("two-sided filter length must be odd, got {len}")));
    }
    if window < len || window % 2 == 0 {
        return Err(MssaError::InvalidDimension(format!("window {window} must be odd and at least {len}")));
    }
    let center = window / 2;
    let half = len / 2;
    let row = whittaker_row(lambda, 2, window, center)?;
    let mut w = row[center - half..=center + half].to_vec();
    // symmetrize against round-off; the row is symmetric in exact arithmetic
    for k in 0..half {
        let avg = 0.5 * (w[k] + w[len - 1 - k]);
        w[k] = avg;
        w[len - 1 - k] = avg;
    }
    let w = normalize(w);
    Ok(TargetSpec {
        kind: TargetKind::HpTwoSided,
        delta: 0,
        filter: LaggedFilter::diagonal(1, -(half as i64), &w)?,
        lambda: Some(lambda),
        diff_order: Some(2),
    })
}

/// `Γ = I` at lag 0, horizon `h` carried in `delta`.
pub fn allpass_shift(n: usize, h: i64) -> TargetSpec {
    TargetSpec {
        kind: if h == 0 { TargetKind::Identity } else { TargetKind::AllpassShift },
        delta: h,
        filter: LaggedFilter::diagonal(n, 0, &[1.0]).expect("non-empty filter"),
        lambda: None,
        diff_order: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkKind {
    MseNowcast,
    HpConcurrent,
    MseVar,
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchmarkKind::MseNowcast => "mse-nowcast",
            BenchmarkKind::HpConcurrent => "hp-concurrent",
            BenchmarkKind::MseVar => "mse-var",
        })
    }
}

/// Causal data-space filter `B_k`, lags `0..L`.
#[derive(Debug, Clone)]
pub struct BenchmarkFilter {
    pub name: BenchmarkKind,
    pub weights: MaExpansion,
}

impl BenchmarkFilter {
    /// Applies a univariate benchmark to each of `n` series separately.
    pub fn diagonal(&self, n: usize) -> Result<Self> {
        if self.weights.n_out() != 1 || self.weights.n_in() != 1 {
            return Err(MssaError::InvalidDimension("only univariate benchmarks can be spread diagonally".into()));
        }
        let coeffs = self.weights.coeffs().iter().map(|c| DMatrix::identity(n, n) * c[(0, 0)]).collect();
        Ok(Self { name: self.name, weights: MaExpansion::new(coeffs)? })
    }
}

/// Concurrent HP(λ): the last row of the `L`-point smoother, reversed into lags `0..L`
/// and normalized to unit sum.
pub fn hp_concurrent(lambda: f64, len: usize) -> Result<BenchmarkFilter> {
    let mut row = whittaker_row(lambda, 2, len, len - 1)?;
    row.reverse();
    Ok(BenchmarkFilter { name: BenchmarkKind::HpConcurrent, weights: MaExpansion::scalar(&normalize(row))? })
}

/// Minimum-MSE causal predictor of the target, `len` lags: convolve with `Ξ`, keep the
/// causal part, deconvolve.
pub fn mse_nowcast(target: &TargetSpec, xi: &MaExpansion, len: usize) -> Result<BenchmarkFilter> {
    let gxi = target.convolved(xi, len)?;
    let weights = deconvolve(&gxi, &xi.truncated(len))?;
    let name = if target.kind == TargetKind::AllpassShift && target.delta > 0 {
        BenchmarkKind::MseVar
    } else {
        BenchmarkKind::MseNowcast
    };
    Ok(BenchmarkFilter { name, weights })
}
