//! Multivariate smoothing of a three-dimensional VAR(1) with an identity target.

use mssa_core::metrics::{cross_correlation, empirical_metrics, ht_from_acf, sa_from_corr};
use mssa_core::processes::ma_inversion;
use mssa_core::solver::solve_mssa;
use mssa_core::spectral::{quad_form_i, quad_form_m};
use mssa_core::TridiagSpectrum;

use crate::common::{common_range, effective_filter, filter_series, mean, replicate, target_series, weight_columns};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, SeriesSet, Table};

const CCF_LAGS: usize = 10;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let model = cfg.model()?;
    let sigma = model.sigma();
    let n = model.dim();
    let len = cfg.length;
    let xi = ma_inversion(&model, cfg.expansion_length)?;
    let target = cfg.target.build(n, cfg.delta)?;
    let gxi = target.convolved(&xi, len)?;
    let target_vars = target.variances(&xi, sigma)?;
    let spectrum = TridiagSpectrum::new(len)?;
    let constraints = cfg.ht_constraints()?;

    let sols = (0..n)
        .map(|i| solve_mssa(&gxi.row(i), sigma, &spectrum, &constraints[i]))
        .collect::<mssa_core::Result<Vec<_>>>()?;
    let filters = effective_filter(&sols.iter().map(|s| s.b.clone()).collect::<Vec<_>>(), &xi)?;

    let mut out = Outcome::default();
    let mut expected = Vec::new();
    for (i, sol) in sols.iter().enumerate() {
        let corr = sol.correlation_with_target(target_vars[i]);
        let x = xi.row(i);
        let data_ht = ht_from_acf(quad_form_m(&x, sigma)? / quad_form_i(&x, sigma)?)?;
        let key = |k: &str| format!("series{}.{k}", i + 1);
        out.set(key("expected_sa"), sa_from_corr(corr));
        out.set(key("expected_corr"), corr);
        out.set(key("ht"), sol.realized_ht);
        out.set(key("data_ht"), data_ht);
        expected.push([sa_from_corr(corr), corr, sol.realized_ht, data_ht]);
    }

    let sim = &cfg.simulation;
    let mut sample = vec![[f64::NAN; 4]; n];
    let mut ccf = None;
    if sim.samples > 0 {
        let reps = replicate(&model, sim, |x| {
            let y = filter_series(&filters, x)?;
            let z = target_series(&target, x)?;
            let mut stats = Vec::with_capacity(n);
            for i in 0..n {
                let r = common_range(&[&y[i], &z[i]]);
                let m = empirical_metrics(&y[i][r.clone()], Some(&z[i][r]), 0)?;
                let col: Vec<f64> = x.column(i).iter().copied().collect();
                let d = empirical_metrics(&col, None, 0)?;
                stats.push([
                    m.sign_accuracy.unwrap_or(f64::NAN),
                    m.target_correlation.unwrap_or(f64::NAN),
                    m.holding_time,
                    d.holding_time,
                ]);
            }
            let cols: Vec<Vec<f64>> = (0..n).map(|j| x.column(j).iter().copied().collect()).collect();
            let lead = (0..n)
                .map(|j| cross_correlation(&cols[1.min(n - 1)], &cols[j], CCF_LAGS).map(|v| v.into_iter().map(|p| p.1).collect()))
                .collect::<mssa_core::Result<Vec<Vec<f64>>>>()?;
            Ok((stats, lead))
        })?;
        for (i, s) in sample.iter_mut().enumerate() {
            for (k, v) in s.iter_mut().enumerate() {
                *v = mean(&reps.iter().map(|(st, _)| st[i][k]).collect::<Vec<_>>());
            }
            let key = |k: &str| format!("series{}.{k}", i + 1);
            out.set(key("sample_sa"), s[0]);
            out.set(key("sample_corr"), s[1]);
            out.set(key("sample_ht"), s[2]);
            out.set(key("sample_data_ht"), s[3]);
        }
        ccf = reps.into_iter().next().map(|(_, c)| c);
    }

    let mut table = Table::new(
        "var3_performance",
        &["series", "sign_accuracy", "sample_sa", "corr_with_data", "sample_corr", "ht_mssa", "sample_ht", "ht_data", "sample_ht_data"],
    );
    for i in 0..n {
        let (e, s) = (expected[i], sample[i]);
        table.push(&format!("{}", i + 1), &[e[0], s[0], e[1], s[1], e[2], s[2], e[3], s[3]]);
    }
    out.tables.push(table);

    let names: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    for i in 0..n {
        let mut w = SeriesSet::with_range(&format!("var3_weights_series{}", i + 1), "lag", 0, len);
        for (name, col) in weight_columns(&filters, i, &names) {
            w.add(name.as_str(), col);
        }
        out.plot(&w, &format!("M-SSA smoother weights, target series {}", i + 1));
        out.series.push(w);
    }
    if let Some(ccf) = ccf {
        let mut s = SeriesSet::with_range("var3_ccf", "lag", -(CCF_LAGS as i64), 2 * CCF_LAGS + 1);
        for (j, c) in ccf.into_iter().enumerate() {
            s.add(&format!("x2_vs_x{}", j + 1), c);
        }
        out.plot(&s, "Cross-correlations of the second series");
        out.series.push(s);
    }
    Ok(out)
}
