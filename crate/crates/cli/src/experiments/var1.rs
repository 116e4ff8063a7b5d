//! One-step-ahead forecasting of a bivariate VAR(1) under holding-time constraints.

use mssa_core::metrics::{empirical_metrics, ht_from_acf, sa_from_corr, sample_correlation};
use mssa_core::processes::ma_inversion;
use mssa_core::solver::solve_mssa;
use mssa_core::spectral::{quad_form_i, quad_form_m};
use mssa_core::TridiagSpectrum;

use crate::common::{common_range, effective_filter, filter_series, mean, replicate, target_series, weight_columns};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, SeriesSet, Table};

/// Per-series sample statistics of one simulated path.
#[derive(Debug, Clone, Default)]
struct SampleStats {
    crit: f64,
    ht_ssa: f64,
    ht_mse: f64,
    corr: f64,
    sa: f64,
}

const SHOWN: usize = 300;

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

    let rows: Vec<_> = (0..n).map(|i| gxi.row(i)).collect();
    let sols = rows.iter().zip(&constraints).map(|(g, c)| solve_mssa(g, sigma, &spectrum, c)).collect::<mssa_core::Result<Vec<_>>>()?;
    let ssa = effective_filter(&sols.iter().map(|s| s.b.clone()).collect::<Vec<_>>(), &xi)?;
    let mse = effective_filter(&rows, &xi)?;

    let mut out = Outcome::default();
    let mut expected = Vec::new();
    for (i, (g, sol)) in rows.iter().zip(&sols).enumerate() {
        let mse_ht = ht_from_acf(quad_form_m(g, sigma)? / quad_form_i(g, sigma)?)?;
        let corr = sol.correlation_with_target(target_vars[i]);
        let key = |k: &str| format!("series{}.{k}", i + 1);
        out.set(key("nu"), sol.nu);
        out.set(key("true_crit"), sol.target_correlation);
        out.set(key("true_ht"), sol.realized_ht);
        out.set(key("mse_ht"), mse_ht);
        out.set(key("expected_corr"), corr);
        out.set(key("expected_sa"), sa_from_corr(corr));
        expected.push((sol.target_correlation, sol.realized_ht, mse_ht, sol.nu));
    }

    let sim = &cfg.simulation;
    let mut sample: Vec<SampleStats> = vec![SampleStats::default(); n];
    let mut shown = None;
    if sim.samples > 0 {
        let reps = replicate(&model, sim, |x| {
            let y = filter_series(&ssa, x)?;
            let m = filter_series(&mse, x)?;
            let z = target_series(&target, x)?;
            let mut stats = Vec::with_capacity(n);
            for i in 0..n {
                let r = common_range(&[&y[i], &m[i], &z[i]]);
                let (yi, mi, zi) = (&y[i][r.clone()], &m[i][r.clone()], &z[i][r.clone()]);
                let ey = empirical_metrics(yi, Some(zi), 0)?;
                let em = empirical_metrics(mi, None, 0)?;
                stats.push(SampleStats {
                    crit: sample_correlation(yi, mi),
                    ht_ssa: ey.holding_time,
                    ht_mse: em.holding_time,
                    corr: ey.target_correlation.unwrap_or(f64::NAN),
                    sa: ey.sign_accuracy.unwrap_or(f64::NAN),
                });
            }
            let r = common_range(&[&y[0], &m[0], &z[0]]);
            let take = |v: &Vec<f64>| v[r.clone()].iter().take(SHOWN).copied().collect::<Vec<_>>();
            let paths: Vec<Vec<f64>> = (0..n).flat_map(|i| [take(&y[i]), take(&m[i]), take(&z[i])]).collect();
            Ok((stats, paths))
        })?;
        for i in 0..n {
            let avg = |f: fn(&SampleStats) -> f64| mean(&reps.iter().map(|(s, _)| f(&s[i])).collect::<Vec<_>>());
            sample[i] = SampleStats {
                crit: avg(|s| s.crit),
                ht_ssa: avg(|s| s.ht_ssa),
                ht_mse: avg(|s| s.ht_mse),
                corr: avg(|s| s.corr),
                sa: avg(|s| s.sa),
            };
            let key = |k: &str| format!("series{}.{k}", i + 1);
            out.set(key("sample_crit"), sample[i].crit);
            out.set(key("sample_ht"), sample[i].ht_ssa);
            out.set(key("sample_ht_mse"), sample[i].ht_mse);
            out.set(key("sample_corr"), sample[i].corr);
            out.set(key("sample_sa"), sample[i].sa);
        }
        shown = reps.into_iter().next().map(|(_, p)| p);
    }

    let mut table = Table::new(
        "var1_performance",
        &["series", "sample_crit", "true_crit", "sample_ht_ssa", "true_ht_ssa", "sample_ht_mse", "true_ht_mse", "nu"],
    );
    for (i, (crit, ht, mse_ht, nu)) in expected.iter().enumerate() {
        let s = &sample[i];
        let (sc, sh, sm) = if sim.samples > 0 { (s.crit, s.ht_ssa, s.ht_mse) } else { (f64::NAN, f64::NAN, f64::NAN) };
        table.push(&format!("{}", i + 1), &[sc, *crit, sh, *ht, sm, *mse_ht, *nu]);
    }
    out.tables.push(table);

    let names: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    for i in 0..n {
        let mut w = SeriesSet::with_range(&format!("var1_weights_series{}", i + 1), "lag", 0, len);
        for (name, col) in weight_columns(&ssa, i, &names) {
            w.add(&format!("mssa_{name}"), col);
        }
        for (name, col) in weight_columns(&mse, i, &names) {
            w.add(&format!("mse_{name}"), col);
        }
        out.plot(&w, &format!("M-SSA and MSE weights, target series {}", i + 1));
        out.series.push(w);
    }
    if let Some(paths) = shown {
        let mut s = SeriesSet::with_range("var1_outputs", "t", 0, paths[0].len());
        for i in 0..n {
            s.add(&format!("mssa{}", i + 1), paths[3 * i].clone());
            s.add(&format!("mse{}", i + 1), paths[3 * i + 1].clone());
            s.add(&format!("target{}", i + 1), paths[3 * i + 2].clone());
        }
        out.plot(&s, "Predictors and one-step-ahead targets");
        out.series.push(s);
    }
    Ok(out)
}
