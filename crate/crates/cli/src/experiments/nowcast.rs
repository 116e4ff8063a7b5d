//! Nowcasting the HP trend of industrial production: univariate HP-C and SSA
//! benchmarks against bivariate MSE and M-SSA filters that add a leading indicator.

use chrono::NaiveDate;
use mssa_core::data::{join, load_csv, log_diff_standardize, trim_outliers, SeriesFrame};
use mssa_core::metrics::{cross_correlation, empirical_metrics, ht_from_acf, sample_correlation};
use mssa_core::processes::{convolve_causal, deconvolve, ma_inversion, LaggedFilter};
use mssa_core::solver::solve_mssa;
use mssa_core::spectral::{cross_form_i, quad_form_i, quad_form_m};
use mssa_core::targets::{hp_concurrent, hp_two_sided};
use mssa_core::{HtConstraint, MaExpansion, StackedFilter, TargetSpec, TridiagSpectrum};
use nalgebra::DMatrix;

use crate::bootstrap::{gather, moving_block, standard_error};
use crate::common::{common_range, effective_filter, filter_series, lagged_series, replicate, target_series, weight_columns};
use crate::config::{DataConfig, ExperimentConfig, NowcastConfig};
use crate::error::{CliError, Result};
use crate::output::{Outcome, SeriesSet, Table};

/// Filter names in table order.
pub const FILTERS: [&str; 4] = ["hpc", "ssa", "mssa", "mse"];

struct Designs {
    target: TargetSpec,
    /// Data-space weights `1 x 2` on (INDPRO, CLI).
    hpc: MaExpansion,
    mssa: MaExpansion,
    mse: MaExpansion,
    /// Data-space weights `1 x 1` on INDPRO.
    ssa: MaExpansion,
    /// Innovation-form weights of the bivariate designs, for plotting.
    xi: MaExpansion,
}

fn corr_ht(b: &StackedFilter, g: &StackedFilter, var: f64, sigma: &mssa_core::NoiseCovariance) -> Result<(f64, f64)> {
    let qi = quad_form_i(b, sigma)?;
    let corr = cross_form_i(g, b, sigma)? / (qi * var).sqrt();
    Ok((corr, ht_from_acf(quad_form_m(b, sigma)? / qi)?))
}

fn nowcast_section(cfg: &ExperimentConfig) -> Result<&NowcastConfig> {
    cfg.nowcast.as_ref().ok_or_else(|| CliError::Validation("indpro-nowcast needs [nowcast]".into()))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let nc = nowcast_section(cfg)?;
    let len = cfg.length;
    let spectrum = TridiagSpectrum::new(len)?;
    let constraint = HtConstraint::holding_time(nc.ht);
    let mut out = Outcome::default();

    // bivariate model
    let model = cfg.model()?;
    let sigma = model.sigma();
    let xi = ma_inversion(&model, cfg.expansion_length)?;
    let hp = hp_two_sided(nc.lambda, nc.target_window)?;
    let target = hp.diagonal(2)?;
    let gxi = target.convolved(&xi, len)?;
    let var = target.variances(&xi, sigma)?[0];
    let g = gxi.row(0);
    let sol = solve_mssa(&g, sigma, &spectrum, &constraint)?;
    let hpc_uni = hp_concurrent(nc.lambda, len)?.weights;
    let hpc = MaExpansion::new(
        hpc_uni.coeffs().iter().map(|c| DMatrix::from_row_slice(1, 2, &[c[(0, 0)], 0.0])).collect(),
    )?;
    let hpc_xi = convolve_causal(&hpc, &xi.truncated(len))?.row(0);

    let (cor_mse, ht_mse) = corr_ht(&g, &g, var, sigma)?;
    let (cor_mssa, ht_mssa) = (sol.correlation_with_target(var), sol.realized_ht);
    let (cor_hpc, ht_hpc) = corr_ht(&hpc_xi, &g, var, sigma)?;

    // univariate model of the first series
    let uni = nc.univariate.build()?;
    let xi_u = ma_inversion(&uni, cfg.expansion_length)?;
    let g_u = hp.convolved(&xi_u, len)?.row(0);
    let var_u = hp.variances(&xi_u, uni.sigma())?[0];
    let sol_u = solve_mssa(&g_u, uni.sigma(), &spectrum, &constraint)?;
    let hpc_u = convolve_causal(&hpc_uni, &xi_u.truncated(len))?.row(0);
    let (cor_ssa, ht_ssa) = (sol_u.correlation_with_target(var_u), sol_u.realized_ht);
    let (_, ht_hpc_u) = corr_ht(&hpc_u, &g_u, var_u, uni.sigma())?;
    let (_, ht_mse_u) = corr_ht(&g_u, &g_u, var_u, uni.sigma())?;

    for (k, v) in [
        ("expected.hpc.corr", cor_hpc),
        ("expected.hpc.ht", ht_hpc),
        ("expected.ssa.corr", cor_ssa),
        ("expected.ssa.ht", ht_ssa),
        ("expected.mssa.corr", cor_mssa),
        ("expected.mssa.ht", ht_mssa),
        ("expected.mse.corr", cor_mse),
        ("expected.mse.ht", ht_mse),
        ("univariate.hpc.ht", ht_hpc_u),
        ("univariate.mse.ht", ht_mse_u),
        ("mssa.nu", sol.nu),
    ] {
        out.set(k, v);
    }

    let designs = Designs {
        target: target.clone(),
        mssa: effective_filter(std::slice::from_ref(&sol.b), &xi)?,
        mse: effective_filter(std::slice::from_ref(&g), &xi)?,
        ssa: deconvolve(&MaExpansion::from_rows(std::slice::from_ref(&sol_u.b))?, &xi_u.truncated(len))?,
        hpc,
        xi,
    };
    weight_outputs(&mut out, &designs, &sol.b, &g, len)?;

    let mut expected_table = Table::new("nowcast_expected", &["row", "cor_hpc", "cor_mssa", "cor_mse", "ht_hpc", "ht_mssa", "ht_mse"]);
    expected_table.push("expected", &[cor_hpc, cor_mssa, cor_mse, ht_hpc, ht_mssa, ht_mse]);
    if cfg.simulation.samples > 0 {
        let sample = simulate(cfg, &model, &designs)?;
        for (name, (c, h)) in ["hpc", "mssa", "mse"].iter().zip(&sample) {
            out.set(format!("sample.{name}.corr"), *c);
            out.set(format!("sample.{name}.ht"), *h);
        }
        expected_table.push("sample", &[sample[0].0, sample[1].0, sample[2].0, sample[0].1, sample[1].1, sample[2].1]);
    }
    out.tables.push(expected_table);

    let expected = [(cor_hpc, ht_hpc), (cor_ssa, ht_ssa), (cor_mssa, ht_mssa), (cor_mse, ht_mse)];
    match &nc.data {
        Some(data) if data.indpro.exists() && data.cli.exists() => {
            real_data(&mut out, nc, data, &designs, &expected, cfg.simulation.seed)?
        }
        Some(data) => {
            let msg = format!(
                "data fixtures not found ({}, {}); reporting the expected rows only. Use --fetch-data to download them",
                data.indpro.display(),
                data.cli.display()
            );
            log::warn!("{msg}");
            out.notes.push(msg);
        }
        None => out.notes.push("no [nowcast.data] section; reporting the expected rows only".into()),
    }
    Ok(out)
}

fn weight_outputs(
    out: &mut Outcome,
    d: &Designs,
    mssa_xi: &StackedFilter,
    mse_xi: &StackedFilter,
    len: usize,
) -> Result<()> {
    let names = ["indpro", "cli"];
    let xi = &d.xi;
    let mut w = SeriesSet::with_range("nowcast_weights", "lag", 0, len);
    for (label, f) in [("mssa", &d.mssa), ("mse", &d.mse), ("hpc", &d.hpc)] {
        for (name, col) in weight_columns(f, 0, &names) {
            w.add(&format!("{label}_{name}"), col);
        }
    }
    w.add("ssa_indpro", weight_columns(&d.ssa, 0, &names).remove(0).1);
    out.plot(&w, "Nowcast weights on INDPRO and CLI");
    out.series.push(w);

    let mut m = SeriesSet::with_range("nowcast_ma_weights", "lag", 0, len);
    for (label, f) in [("mssa", mssa_xi), ("mse", mse_xi)] {
        for (j, name) in names.iter().enumerate() {
            m.add(&format!("{label}_{name}"), f.block(j).to_vec());
        }
    }
    for (i, a) in names.iter().enumerate() {
        for (j, b) in names.iter().enumerate() {
            m.add(&format!("xi_{a}_{b}"), (0..len).map(|k| xi.coeff(k)[(i, j)]).collect());
        }
    }
    out.plot(&m, "MA inversion and innovation-form nowcasts");
    out.series.push(m);
    Ok(())
}

/// Sample correlation with the target and holding time of HP-C, M-SSA and MSE on one
/// long simulated path per replication (averaged).
fn simulate(cfg: &ExperimentConfig, model: &mssa_core::VarmaModel, d: &Designs) -> Result<Vec<(f64, f64)>> {
    let reps = replicate(model, &cfg.simulation, |x| {
        let z = target_series(&d.target, x)?.swap_remove(0);
        [&d.hpc, &d.mssa, &d.mse]
            .into_iter()
            .map(|f| {
                let y = filter_series(f, x)?.swap_remove(0);
                let r = common_range(&[&y, &z]);
                let m = empirical_metrics(&y[r.clone()], Some(&z[r]), 0)?;
                Ok((m.target_correlation.unwrap_or(f64::NAN), m.holding_time))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let k = reps.len() as f64;
    Ok((0..3)
        .map(|i| {
            let c = reps.iter().map(|r| r[i].0).sum::<f64>() / k;
            let h = reps.iter().map(|r| r[i].1).sum::<f64>() / k;
            (c, h)
        })
        .collect())
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| CliError::Validation(format!("bad date {s:?}, expected YYYY-MM-DD")))
}

/// Loads both series, keeps the common dates inside `[start, end]`, log-differences,
/// standardizes and clips. Returns the transformed frame and the number of clipped points.
pub fn prepare_data(data: &DataConfig, trim_sigma: f64) -> Result<(SeriesFrame, usize)> {
    let a = load_csv(&data.indpro, &data.date_column, &[data.indpro_column.as_str()])?;
    let b = load_csv(&data.cli, &data.date_column, &[data.cli_column.as_str()])?;
    let joined = join(&[a, b])?;
    let start = data.start.as_deref().map(parse_date).transpose()?;
    let end = data.end.as_deref().map(parse_date).transpose()?;
    let keep: Vec<usize> = (0..joined.len())
        .filter(|&t| start.is_none_or(|s| joined.dates[t] >= s) && end.is_none_or(|e| joined.dates[t] <= e))
        .collect();
    let frame = SeriesFrame::new(
        keep.iter().map(|&t| joined.dates[t]).collect(),
        joined.names.clone(),
        joined.values.iter().map(|col| keep.iter().map(|&t| col[t]).collect()).collect(),
        joined.provenance.clone(),
    )?;
    let standardized = log_diff_standardize(&frame)?;
    Ok(trim_outliers(&standardized, trim_sigma))
}

fn real_data(
    out: &mut Outcome,
    nc: &NowcastConfig,
    data: &DataConfig,
    d: &Designs,
    expected: &[(f64, f64); 4],
    seed: u64,
) -> Result<()> {
    let (frame, clipped) = prepare_data(data, nc.trim_sigma)?;
    let x = frame.to_matrix();
    let x1 = DMatrix::from_column_slice(x.nrows(), 1, x.column(0).as_slice());
    let half = nc.target_window / 2;
    let hp = hp_two_sided(nc.lambda, nc.target_window)?.scalar_weights();
    // the data only reach `left_tail` observations into the future of each target date
    let truncated = LaggedFilter::diagonal(1, -(nc.left_tail as i64), &hp[half - nc.left_tail..])?;
    let z = lagged_series(&truncated, &x1)?.swap_remove(0);
    let ys = [
        filter_series(&d.hpc, &x)?.swap_remove(0),
        filter_series(&d.ssa, &x1)?.swap_remove(0),
        filter_series(&d.mssa, &x)?.swap_remove(0),
        filter_series(&d.mse, &x)?.swap_remove(0),
    ];
    let mut all: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    all.push(&z);
    let range = common_range(&all);
    if range.len() < 3 * nc.bootstrap.block.max(10) {
        return Err(CliError::Data(format!("only {} usable observations after filtering", range.len())));
    }
    out.set("data.observations", frame.len() as f64);
    out.set("data.evaluated", range.len() as f64);
    out.set("data.clipped", clipped as f64);

    let zr = &z[range.clone()];
    let mut corr_table = Table::new("nowcast_correlations", &["row", "cor_hpc", "cor_ssa", "cor_mssa", "cor_mse"]);
    let mut ht_table = Table::new("nowcast_holding_times", &["row", "ht_hpc", "ht_ssa", "ht_mssa", "ht_mse"]);
    let (mut corr, mut ht, mut corr_se, mut ht_se) = (vec![], vec![], vec![], vec![]);
    for (k, (name, y)) in FILTERS.iter().zip(&ys).enumerate() {
        let yr = &y[range.clone()];
        let m = empirical_metrics(yr, Some(zr), 0)?;
        let seed = crate::common::replication_seed(seed, k);
        let bc = moving_block(yr.len(), nc.bootstrap.block, nc.bootstrap.replications, seed, |i| {
            sample_correlation(&gather(yr, i), &gather(zr, i))
        });
        let bh = moving_block(yr.len(), nc.bootstrap.block, nc.bootstrap.replications, seed, |i| {
            empirical_metrics(&gather(yr, i), None, 0).map_or(f64::NAN, |m| m.holding_time)
        });
        corr.push(m.target_correlation.unwrap_or(f64::NAN));
        ht.push(m.holding_time);
        corr_se.push(standard_error(&bc));
        ht_se.push(standard_error(&bh));
        out.set(format!("data.{name}.corr"), corr[k]);
        out.set(format!("data.{name}.ht"), ht[k]);
        out.set(format!("data.{name}.corr_se"), corr_se[k]);
        out.set(format!("data.{name}.ht_se"), ht_se[k]);
        out.set(format!("data.{name}.ht_gaps"), m.holding_time_gaps.unwrap_or(f64::NAN));
    }
    corr_table.push("expected", &expected.map(|e| e.0));
    corr_table.push("sample", &corr);
    corr_table.push("bootstrap_se", &corr_se);
    ht_table.push("expected", &expected.map(|e| e.1));
    ht_table.push("sample", &ht);
    ht_table.push("bootstrap_se", &ht_se);
    out.tables.push(corr_table);
    out.tables.push(ht_table);

    let dates: Vec<String> = frame.dates[range.clone()].iter().map(|d| d.to_string()).collect();
    let mut series = SeriesSet::new("nowcast_outputs", "date", dates.clone());
    series.add("target", zr.to_vec());
    for (name, y) in FILTERS.iter().zip(&ys) {
        series.add(name, y[range.clone()].to_vec());
    }
    out.plot(&series, "INDPRO nowcasts and truncated two-sided HP target");
    out.series.push(series);

    // per-input components of the M-SSA nowcast
    let mut comp = SeriesSet::new("mssa_components", "date", dates);
    for (j, name) in ["indpro", "cli"].iter().enumerate() {
        let w = MaExpansion::new(d.mssa.coeffs().iter().map(|c| DMatrix::from_element(1, 1, c[(0, j)])).collect())?;
        let xj = DMatrix::from_column_slice(x.nrows(), 1, x.column(j).as_slice());
        comp.add(name, filter_series(&w, &xj)?.swap_remove(0)[range.clone()].to_vec());
    }
    comp.add("aggregate", ys[2][range.clone()].to_vec());
    out.plot(&comp, "M-SSA nowcast split by input series");
    out.series.push(comp);

    let lag = nc.ccf_max_lag;
    let mut ccf = SeriesSet::with_range("nowcast_ccf", "lag", -(lag as i64), 2 * lag + 1);
    let col = |j: usize| x.column(j).iter().copied().collect::<Vec<_>>();
    let pairs: [(&str, &[f64], &[f64]); 3] = [
        ("mssa_vs_ssa", &ys[2][range.clone()], &ys[1][range.clone()]),
        ("mssa_vs_hpc", &ys[2][range.clone()], &ys[0][range.clone()]),
        ("cli_vs_indpro", &col(1), &col(0)),
    ];
    for (name, a, b) in pairs {
        let c = cross_correlation(a, b, lag)?;
        let peak = c.iter().max_by(|p, q| p.1.total_cmp(&q.1)).map_or(0, |p| p.0);
        out.set(format!("data.ccf_peak.{name}"), peak as f64);
        ccf.add(name, c.into_iter().map(|p| p.1).collect());
    }
    out.plot(&ccf, "Cross-correlations corr(a[t+k], b[t])");
    out.series.push(ccf);
    Ok(())
}
