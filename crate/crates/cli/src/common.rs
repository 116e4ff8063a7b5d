//! Pieces shared by the experiments.

use mssa_core::processes::{apply_filter, deconvolve, simulate_with_burn_in, LaggedFilter};
use mssa_core::{MaExpansion, StackedFilter, TargetSpec, VarmaModel};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::SimulationConfig;
use crate::error::Result;

/// Seed of replication `r`.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs `f` on independent simulated samples in parallel, results in replication order.
pub fn replicate<T, F>(model: &VarmaModel, sim: &SimulationConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&DMatrix<f64>) -> Result<T> + Sync,
{
    (0..sim.replications)
        .into_par_iter()
        .map(|r| {
            let x = simulate_with_burn_in(model, sim.samples, replication_seed(sim.seed, r), sim.burn_in)?;
            f(&x)
        })
        .collect()
}

/// Data-space weights `B` of a predictor given in innovation form `(B·Ξ)`, one row per filter.
pub fn effective_filter(rows: &[StackedFilter], xi: &MaExpansion) -> Result<MaExpansion> {
    let bxi = MaExpansion::from_rows(rows)?;
    Ok(deconvolve(&bxi, &xi.truncated(bxi.len()))?)
}

/// Causal filter output aligned with the sample: `out[t]` is NaN until enough history exists.
pub fn filter_series(weights: &MaExpansion, x: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    lagged_series(&LaggedFilter::from(weights.clone()), x)
}

pub fn lagged_series(filter: &LaggedFilter, x: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let out = apply_filter(filter, x)?;
    Ok((0..out.values.ncols())
        .map(|i| {
            let mut v = vec![f64::NAN; x.nrows()];
            for (r, val) in out.values.column(i).iter().enumerate() {
                v[out.first + r] = *val;
            }
            v
        })
        .collect())
}

/// Shared finite range of several aligned series.
pub fn common_range(series: &[&[f64]]) -> std::ops::Range<usize> {
    let n = series.iter().map(|s| s.len()).min().unwrap_or(0);
    let ok = |t: usize| series.iter().all(|s| s[t].is_finite());
    let start = (0..n).find(|&t| ok(t)).unwrap_or(n);
    let end = (start..n).rev().find(|&t| ok(t)).map_or(start, |t| t + 1);
    start..end
}

/// Target path aligned with the predictors: `out[t] = z_{t+δ}`, NaN where not computable.
pub fn target_series(target: &TargetSpec, x: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let z = lagged_series(&target.filter, x)?;
    let shift = target.delta;
    Ok(z.into_iter()
        .map(|col| {
            (0..col.len() as i64)
                .map(|t| usize::try_from(t + shift).ok().and_then(|s| col.get(s)).copied().unwrap_or(f64::NAN))
                .collect()
        })
        .collect())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Filter weights in long format: one column per input series, lags as the index.
pub fn weight_columns(weights: &MaExpansion, row: usize, names: &[&str]) -> Vec<(String, Vec<f64>)> {
    (0..weights.n_in())
        .map(|j| {
            let name = names.get(j).map_or_else(|| format!("x{}", j + 1), |s| s.to_string());
            (name, weights.coeffs().iter().map(|c| c[(row, j)]).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn common_range_skips_nan_edges() {
        let a = [f64::NAN, 1.0, 2.0, 3.0];
        let b = [0.0, 1.0, 2.0, f64::NAN];
        assert_eq!(common_range(&[&a, &b]), 1..3);
    }

    #[test]
    fn filter_series_alignment() {
        let x = DMatrix::from_column_slice(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let w = MaExpansion::scalar(&[1.0, -1.0]).unwrap();
        let y = filter_series(&w, &x).unwrap();
        assert!(y[0][0].is_nan());
        assert_eq!(&y[0][1..], &[1.0, 1.0, 1.0, 1.0]);
    }
}
