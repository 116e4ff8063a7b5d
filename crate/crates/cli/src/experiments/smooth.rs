//! White-noise smoothing: two-sided HP against SSA smoothers matching either its
//! holding time or its target correlation, plus the backcast-to-nowcast sweep.

use mssa_core::metrics::{filter_acf1, ht_from_acf, rms_second_diff};
use mssa_core::solver::{solve_dual, solve_mssa};
use mssa_core::targets::{allpass_shift, hp_two_sided};
use mssa_core::{HtConstraint, MaExpansion, NoiseCovariance, StackedFilter, TridiagSpectrum};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{Outcome, SeriesSet, Table};

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Stacked MSE target of a white-noise backcast `δ ≤ 0`: a spike at lag `-δ`.
fn spike(len: usize, delta: i64) -> Result<StackedFilter> {
    Ok(allpass_shift(1, delta).convolved(&MaExpansion::identity(1, len), len)?.row(0))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let s = cfg.smoothing.as_ref().ok_or_else(|| CliError::Validation("wh-smooth needs [smoothing]".into()))?;
    let len = cfg.length;
    let center = (len - 1) / 2;
    let spectrum = TridiagSpectrum::new(len)?;
    let sigma = NoiseCovariance::identity(1);

    let hp = hp_two_sided(s.lambda, len)?.scalar_weights();
    let hp_acf = filter_acf1(&hp);
    let hp_corr = hp[center] / hp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gamma = spike(len, -(center as i64))?;

    let ssa1 = solve_mssa(&gamma, &sigma, &spectrum, &HtConstraint::acf(hp_acf))?;
    let ssa2 = solve_dual(&gamma, &sigma, &spectrum, s.ssa2_correlation.unwrap_or(hp_corr), None, 1.0)?;

    let mut out = Outcome::default();
    let rows = [
        ("hp", ht_from_acf(hp_acf)?, hp_corr, rms_second_diff(&hp)?),
        ("ssa1", ssa1.realized_ht, ssa1.target_correlation, rms_second_diff(ssa1.b.block(0))?),
        ("ssa2", ssa2.realized_ht, ssa2.target_correlation, rms_second_diff(ssa2.b.block(0))?),
    ];
    let mut table = Table::new("smoothing_comparison", &["measure", "hp", "ssa1", "ssa2"]);
    table.push("holding_time", &rows.map(|r| r.1));
    table.push("target_correlation", &rows.map(|r| r.2));
    table.push("rms_second_diff", &rows.map(|r| r.3));
    out.tables.push(table);
    for (name, ht, corr, rms) in rows {
        out.set(format!("{name}.ht"), ht);
        out.set(format!("{name}.corr"), corr);
        out.set(format!("{name}.rms"), rms);
    }
    out.set("hp.acf", hp_acf);
    out.set("ssa2.nu", ssa2.nu);
    if !ssa1.complete_support {
        out.notes.push("the symmetric smoothing target lacks complete spectral support; solved on the outer branch".into());
    }

    let mut w = SeriesSet::with_range("wh_smoothers", "lag", 0, len);
    w.add("hp", unit(&hp)).add("ssa1", unit(ssa1.b.block(0))).add("ssa2", unit(ssa2.b.block(0)));
    out.plot(&w, "Symmetric HP and SSA smoothers (unit length)");
    out.series.push(w);

    let mut deltas: Vec<i64> = (0..=center).step_by(s.sweep_step).map(|d| -(center as i64) + d as i64).collect();
    if deltas.last() != Some(&0) {
        deltas.push(0);
    }
    let mut sweep = SeriesSet::with_range("wh_sweep", "lag", 0, len);
    for d in deltas {
        let sol = solve_mssa(&spike(len, d)?, &sigma, &spectrum, &HtConstraint::acf(hp_acf))?;
        sweep.add(&format!("delta_{d}"), unit(sol.b.block(0)));
    }
    out.plot(&sweep, "SSA smoothers from symmetric backcast to nowcast");
    out.series.push(sweep);
    Ok(out)
}
