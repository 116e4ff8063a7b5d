//! Runs every bundled experiment and compares headline numbers with the published ones.

use std::path::Path;

use serde::Deserialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::experiments;
use crate::output::{fmt_num, Outcome, Table};
use crate::{bundled_config, Overrides, EXPECTED_VALUES};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub experiment: Experiment,
    pub key: String,
    pub expected: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub relative: bool,
}

impl Check {
    pub fn passes(&self, value: f64) -> bool {
        let tol = if self.relative { self.tolerance * self.expected.abs() } else { self.tolerance };
        (value - self.expected).abs() <= tol
    }
}

#[derive(Debug, Deserialize)]
struct ExpectedFile {
    check: Vec<Check>,
}

pub fn expected_checks() -> Result<Vec<Check>> {
    let f: ExpectedFile = toml::from_str(EXPECTED_VALUES).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(f.check)
}

pub const ALL: [Experiment; 4] =
    [Experiment::Var1Forecast, Experiment::WhSmooth, Experiment::Var3Smooth, Experiment::IndproNowcast];

/// Runs the four experiments with `overrides`, writes each into `out/<name>` and a
/// `replication_summary.csv` into `out`.
pub fn run(overrides: &Overrides, out: &Path) -> Result<Outcome> {
    let checks = expected_checks()?;
    let mut summary = Table::new(
        "replication_summary",
        &["experiment", "key", "expected", "computed", "abs_diff", "tolerance", "status"],
    );
    let mut result = Outcome::default();
    let (mut passed, mut total) = (0, 0);
    for exp in ALL {
        let mut cfg: ExperimentConfig = bundled_config(exp)?;
        overrides.apply(&mut cfg);
        cfg.output = out.join(exp.name());
        let outcome = experiments::run(&cfg)?;
        outcome.write(&cfg.output)?;
        for note in &outcome.notes {
            result.notes.push(format!("{}: {note}", exp.name()));
        }
        for c in checks.iter().filter(|c| c.experiment == exp) {
            total += 1;
            let tol = if c.relative { format!("{}%", c.tolerance * 100.0) } else { fmt_num(c.tolerance) };
            let (computed, diff, status) = match outcome.values.get(&c.key) {
                Some(v) => {
                    let ok = c.passes(*v);
                    passed += ok as usize;
                    (fmt_num(*v), fmt_num((v - c.expected).abs()), if ok { "pass" } else { "FAIL" })
                }
                None => ("NA".into(), "NA".into(), "missing"),
            };
            summary.push_text(vec![
                exp.name().into(),
                c.key.clone(),
                fmt_num(c.expected),
                computed,
                diff,
                tol,
                status.into(),
            ]);
            result.set(format!("{}.{}", exp.name(), c.key), outcome.values.get(&c.key).copied().unwrap_or(f64::NAN));
        }
    }
    result.notes.push(format!("{passed} of {total} published values reproduced within tolerance"));
    result.tables.push(summary);
    Ok(result)
}
