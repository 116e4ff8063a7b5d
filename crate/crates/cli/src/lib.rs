//! Experiment runner for holding-time constrained (M-SSA) predictors: configuration,
//! the bundled experiments, and table/plot output.

pub mod bootstrap;
pub mod common;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fetch;
pub mod output;
pub mod replicate;

use std::path::{Path, PathBuf};

use config::{Experiment, ExperimentConfig};
use error::Result;

/// Directory of the committed config files; relative data paths in the bundled
/// configs resolve against it.
pub const CONFIG_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");

pub const EXPECTED_VALUES: &str = include_str!("../../../configs/expected.toml");

fn bundled_text(exp: Experiment) -> &'static str {
    match exp {
        Experiment::Solve => include_str!("../../../configs/solve_example.toml"),
        Experiment::Var1Forecast => include_str!("../../../configs/var1_forecast.toml"),
        Experiment::WhSmooth => include_str!("../../../configs/wh_smooth.toml"),
        Experiment::Var3Smooth => include_str!("../../../configs/var3_smooth.toml"),
        Experiment::IndproNowcast => include_str!("../../../configs/indpro_nowcast.toml"),
    }
}

/// The committed config of an experiment.
pub fn bundled_config(exp: Experiment) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_toml(bundled_text(exp))?;
    let base = Path::new(CONFIG_DIR).canonicalize().unwrap_or_else(|_| PathBuf::from(CONFIG_DIR));
    if let Some(data) = cfg.nowcast.as_mut().and_then(|n| n.data.as_mut()) {
        for p in [&mut data.indpro, &mut data.cli] {
            if p.is_relative() {
                *p = normalize(&base.join(&*p));
            }
        }
    }
    Ok(cfg)
}

/// Removes `.` and `..` components lexically.
pub(crate) fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            std::path::Component::ParentDir => {
                out.pop();
            }
            std::path::Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.simulation.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.simulation.samples = n;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
    }
}

/// Downloads the nowcast data fixtures named in `cfg`.
pub fn fetch_data(cfg: &ExperimentConfig) -> Result<()> {
    let data = cfg
        .nowcast
        .as_ref()
        .and_then(|n| n.data.as_ref())
        .ok_or_else(|| error::CliError::Validation("--fetch-data needs a [nowcast.data] section".into()))?;
    fetch::fetch_fred(&data.indpro_column, &data.indpro)?;
    fetch::fetch_fred(&data.cli_column, &data.cli)
}
