//! Holding time, sign accuracy, target correlation and curvature of filter outputs,
//! both expected (from filter weights under the model) and empirical (from samples).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{MssaError, Result};
use crate::processes::MaExpansion;
use crate::spectral::{cross_form_i, lag_one_bilinear, quad_form_i, quad_form_m, NoiseCovariance};

/// `π / arccos(ρ)`.
pub fn ht_from_acf(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(MssaError::InvalidParameter(format!("autocorrelation {rho} outside (-1, 1)")));
    }
    Ok(PI / rho.acos())
}

/// `cos(π / ht)`, the inverse of [`ht_from_acf`].
pub fn acf_from_ht(ht: f64) -> Result<f64> {
    if !(ht > 1.0) || !ht.is_finite() {
        return Err(MssaError::InvalidParameter(format!("holding time {ht} must be finite and exceed 1")));
    }
    Ok((PI / ht).cos())
}

/// `0.5 + arcsin(ρ)/π`: probability of equal signs for jointly Gaussian series.
pub fn sa_from_corr(rho: f64) -> f64 {
    0.5 + rho.clamp(-1.0, 1.0).asin() / PI
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub acf1: f64,
    pub holding_time: f64,
    pub sign_accuracy: Option<f64>,
    pub target_correlation: Option<f64>,
    pub rms_second_diff: Option<f64>,
    pub n_crossings: Option<usize>,
    /// Mean distance between consecutive crossings (empirical only).
    pub holding_time_gaps: Option<f64>,
}

/// Lag-one autocorrelation `Σ b_{k-1} b_k / Σ b_k²` of a filter's output under white noise.
pub fn filter_acf1(b: &[f64]) -> f64 {
    lag_one_bilinear(b, b) / b.iter().map(|v| v * v).sum::<f64>()
}

/// Expected metrics of each predictor row of `(B·Ξ)` against the matching row of
/// `(Γ·Ξ)`, where `target_vars[i] = E[z_it²]`.
pub fn expected_metrics(
    bxi: &MaExpansion,
    gxi: &MaExpansion,
    target_vars: &[f64],
    sigma: &NoiseCovariance,
) -> Result<Vec<MetricReport>> {
    if bxi.len() != gxi.len() {
        return Err(MssaError::DimensionMismatch { expected: gxi.len(), got: bxi.len() });
    }
    if bxi.n_out() != gxi.n_out() || target_vars.len() != bxi.n_out() {
        return Err(MssaError::DimensionMismatch { expected: bxi.n_out(), got: target_vars.len() });
    }
    (0..bxi.n_out())
        .map(|i| {
            let b = bxi.row(i);
            let g = gxi.row(i);
            let var = quad_form_i(&b, sigma)?;
            if var <= 0.0 {
                return Err(MssaError::InvalidParameter(format!("predictor {i} has zero variance")));
            }
            let acf1 = quad_form_m(&b, sigma)? / var;
            let corr = cross_form_i(&g, &b, sigma)? / (target_vars[i] * var).sqrt();
            Ok(MetricReport {
                acf1,
                holding_time: ht_from_acf(acf1).unwrap_or(f64::INFINITY),
                sign_accuracy: Some(sa_from_corr(corr)),
                target_correlation: Some(corr),
                ..MetricReport::default()
            })
        })
        .collect()
}

/// Indices `t` at which the sign changes between `t-1` and `t`. Exact zeros keep the
/// sign of the last non-zero value.
pub fn crossing_times(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last = 0.0f64;
    for (t, &v) in y.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && last.signum() != v.signum() {
            out.push(t);
        }
        last = v;
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Lag-one sample autocorrelation about the sample mean.
pub fn sample_acf1(y: &[f64]) -> f64 {
    let m = mean(y);
    let den: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    let num: f64 = y.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

pub fn sample_correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Metrics of a sample path `y` (and optionally its aligned target `z`), ignoring the
/// first `skip` points. Holding time is `(points - 1) / crossings`, `+∞` without crossings.
pub fn empirical_metrics(y: &[f64], z: Option<&[f64]>, skip: usize) -> Result<MetricReport> {
    if let Some(z) = z {
        if z.len() != y.len() {
            return Err(MssaError::DimensionMismatch { expected: y.len(), got: z.len() });
        }
    }
    if y.len() < skip + 3 {
        return Err(MssaError::Data(format!("sample of {} points is too short after skipping {skip}", y.len())));
    }
    let y = &y[skip..];
    let z = z.map(|z| &z[skip..]);
    let times = crossing_times(y);
    let count = times.len();
    let holding_time = if count == 0 { f64::INFINITY } else { (y.len() - 1) as f64 / count as f64 };
    let holding_time_gaps =
        (count >= 2).then(|| (times[count - 1] - times[0]) as f64 / (count - 1) as f64);
    let (sign_accuracy, target_correlation) = match z {
        Some(z) => {
            let hits = y.iter().zip(z).filter(|(a, b)| *a * *b > 0.0).count();
            (Some(hits as f64 / y.len() as f64), Some(sample_correlation(y, z)))
        }
        None => (None, None),
    };
    Ok(MetricReport {
        acf1: sample_acf1(y),
        holding_time,
        sign_accuracy,
        target_correlation,
        rms_second_diff: None,
        n_crossings: Some(count),
        holding_time_gaps,
    })
}

/// `‖Δ²b‖₂` of the zero-padded coefficients after scaling `b` to unit norm, i.e. the
/// standard deviation of the second difference of the output for standardized white
/// noise input with the output itself standardized.
pub fn rms_second_diff(b: &[f64]) -> Result<f64> {
    if b.len() < 3 {
        return Err(MssaError::InvalidDimension(format!("filter of length {} is too short", b.len())));
    }
    let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(MssaError::InvalidParameter("zero filter".into()));
    }
    let at = |k: i64| if k < 0 || k >= b.len() as i64 { 0.0 } else { b[k as usize] / norm };
    let ss: f64 = (0..b.len() as i64 + 2).map(|k| (at(k) - 2.0 * at(k - 1) + at(k - 2)).powi(2)).sum();
    Ok(ss.sqrt())
}

/// `corr(x_{t+k}, y_t)` for `k = -max_lag..=max_lag` on the overlapping samples.
pub fn cross_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Result<Vec<(i64, f64)>> {
    if x.len() != y.len() {
        return Err(MssaError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let n = x.len();
    if n <= max_lag + 2 {
        return Err(MssaError::Data(format!("{n} points are too few for lags up to {max_lag}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let sx = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>();
    let sy = y.iter().map(|v| (v - my).powi(2)).sum::<f64>();
    let scale = (sx * sy).sqrt();
    Ok((-(max_lag as i64)..=max_lag as i64)
        .map(|k| {
            let s: f64 = (0..n as i64)
                .filter(|&t| (0..n as i64).contains(&(t + k)))
                .map(|t| (x[(t + k) as usize] - mx) * (y[t as usize] - my))
                .sum();
            (k, s / scale)
        })
        .collect())
}
