//! Solves an arbitrary model/target/constraint combination from a config file.

use mssa_core::metrics::{empirical_metrics, expected_metrics, ht_from_acf, MetricReport};
use mssa_core::processes::ma_inversion;
use mssa_core::solver::solve_mssa;
use mssa_core::spectral::{cross_form_i, quad_form_i};
use mssa_core::{MaExpansion, TridiagSpectrum};
use serde::Serialize;

use crate::common::{common_range, effective_filter, filter_series, replicate, target_series, weight_columns};
use crate::config::{ExperimentConfig, Scaling};
use crate::error::Result;
use crate::output::{Outcome, SeriesSet, Table};

#[derive(Debug, Serialize)]
pub struct RowReport {
    pub row: usize,
    pub nu: Option<f64>,
    pub realized_ht: f64,
    pub rho_mse: f64,
    pub ht_mse: Option<f64>,
    pub correlation_with_mse: f64,
    pub degenerate_mse: bool,
    pub complete_support: bool,
    pub scale: f64,
    pub expected: MetricReport,
    pub sample: Option<MetricReport>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let model = cfg.model()?;
    let sigma = model.sigma();
    let n = model.dim();
    let len = cfg.length;
    let xi = ma_inversion(&model, cfg.expansion_length)?;
    let target = cfg.target.build(n, cfg.delta)?;
    let gxi = target.convolved(&xi, len)?;
    let vars = target.variances(&xi, sigma)?;
    let spectrum = TridiagSpectrum::new(len)?;
    let constraints = cfg.ht_constraints()?;

    let mut sols = Vec::new();
    let mut rows = Vec::new();
    for (i, c) in constraints.iter().enumerate() {
        let g = gxi.row(i);
        let sol = solve_mssa(&g, sigma, &spectrum, c)?;
        let scale = match cfg.scaling {
            Scaling::Length => 1.0,
            Scaling::Mse => cross_form_i(&g, &sol.b, sigma)? / quad_form_i(&sol.b, sigma)?,
        };
        rows.push(sol.b.scaled(scale));
        sols.push((sol, scale));
    }
    let bxi = MaExpansion::from_rows(&rows)?;
    let weights = effective_filter(&rows, &xi)?;
    let expected = expected_metrics(&bxi, &gxi, &vars, sigma)?;

    let sim = &cfg.simulation;
    let sample = if sim.samples > 0 {
        let single = crate::config::SimulationConfig { replications: 1, ..sim.clone() };
        let mut reps = replicate(&model, &single, |x| {
            let y = filter_series(&weights, x)?;
            let z = target_series(&target, x)?;
            (0..y.len())
                .map(|i| {
                    let r = common_range(&[&y[i], &z[i]]);
                    Ok(empirical_metrics(&y[i][r.clone()], Some(&z[i][r]), 0)?)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Some(reps.swap_remove(0))
    } else {
        None
    };

    let mut out = Outcome::default();
    let mut reports = Vec::new();
    let mut table = Table::new("solution", &["row", "nu", "realized_ht", "ht_mse", "target_correlation", "sign_accuracy", "sample_ht"]);
    for (i, ((sol, scale), exp)) in sols.iter().zip(expected).enumerate() {
        let nu = sol.nu.is_finite().then_some(sol.nu);
        let ht_mse = ht_from_acf(sol.rho_mse).ok();
        let smp = sample.as_ref().map(|s| s[i].clone());
        table.push(
            &format!("{}", i + 1),
            &[
                sol.nu,
                sol.realized_ht,
                ht_mse.unwrap_or(f64::NAN),
                exp.target_correlation.unwrap_or(f64::NAN),
                exp.sign_accuracy.unwrap_or(f64::NAN),
                smp.as_ref().map_or(f64::NAN, |m| m.holding_time),
            ],
        );
        let key = |k: &str| format!("row{}.{k}", i + 1);
        out.set(key("nu"), sol.nu);
        out.set(key("ht"), sol.realized_ht);
        out.set(key("b0"), weights.coeff(0)[(i, i)]);
        if let Some(m) = &smp {
            out.set(key("sample_ht"), m.holding_time);
        }
        if !sol.complete_support {
            out.notes.push(format!("row {}: target lacks complete spectral support", i + 1));
        }
        reports.push(RowReport {
            row: i + 1,
            nu,
            realized_ht: sol.realized_ht,
            rho_mse: sol.rho_mse,
            ht_mse,
            correlation_with_mse: sol.target_correlation,
            degenerate_mse: sol.is_degenerate_mse,
            complete_support: sol.complete_support,
            scale: *scale,
            expected: exp,
            sample: smp,
        });
    }
    out.tables.push(table);
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    out.documents.push(("metrics.json".into(), json + "\n"));

    let names: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut w = SeriesSet::with_range("weights", "lag", 0, len);
    let mut m = SeriesSet::with_range("ma_weights", "lag", 0, len);
    for i in 0..constraints.len() {
        for (name, col) in weight_columns(&weights, i, &names) {
            w.add(&format!("y{}_{name}", i + 1), col);
        }
        for (name, col) in weight_columns(&bxi, i, &names) {
            m.add(&format!("y{}_{name}", i + 1), col);
        }
    }
    out.plot(&w, "Filter weights");
    out.series.push(w);
    out.series.push(m);
    Ok(out)
}
