//! Experiment configuration, read from TOML and validated before any computation.

use std::path::{Path, PathBuf};

use mssa_core::processes::LaggedFilter;
use mssa_core::targets::{allpass_shift, hp_two_sided_windowed};
use mssa_core::{HtConstraint, NoiseCovariance, TargetSpec, VarmaModel};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    Var1Forecast,
    WhSmooth,
    Var3Smooth,
    IndproNowcast,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Var1Forecast => "var1-forecast",
            Experiment::WhSmooth => "wh-smooth",
            Experiment::Var3Smooth => "var3-smooth",
            Experiment::IndproNowcast => "indpro-nowcast",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: Option<ModelConfig>,
    /// Predictor length `L`.
    pub length: usize,
    /// Forecast horizon; negative values backcast.
    #[serde(default)]
    pub delta: i64,
    /// Lags of the MA inversion used for target variances and benchmarks.
    #[serde(default = "default_expansion")]
    pub expansion_length: usize,
    #[serde(default)]
    pub target: TargetConfig,
    /// One entry per target series.
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub scaling: Scaling,
    pub smoothing: Option<SmoothingConfig>,
    pub nowcast: Option<NowcastConfig>,
}

fn default_expansion() -> usize {
    1000
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaSign {
    /// `x_t = ... + ε_t + Θ_1 ε_{t-1} + ...`
    #[default]
    Plus,
    /// `x_t = ... + ε_t - Θ_1 ε_{t-1} - ...`
    Minus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// AR matrices `A_1..A_p`, each given as rows.
    #[serde(default)]
    pub ar: Vec<Rows>,
    #[serde(default)]
    pub ma: Vec<Rows>,
    #[serde(default)]
    pub ma_sign: MaSign,
    pub sigma: Rows,
    pub intercept: Option<Vec<f64>>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<VarmaModel> {
        let sigma = NoiseCovariance::from_rows(&self.sigma)?;
        let n = sigma.dim();
        let sign = if self.ma_sign == MaSign::Minus { -1.0 } else { 1.0 };
        let ar = self.ar.iter().map(|m| matrix(m, n)).collect::<Result<Vec<_>>>()?;
        let ma = self.ma.iter().map(|m| matrix(m, n).map(|m| m * sign)).collect::<Result<Vec<_>>>()?;
        let intercept = self
            .intercept
            .as_ref()
            .map(|c| {
                if c.len() == n {
                    Ok(nalgebra::DVector::from_column_slice(c))
                } else {
                    Err(CliError::Validation(format!("intercept has {} entries for {n} series", c.len())))
                }
            })
            .transpose()?;
        Ok(VarmaModel::new(ar, ma, intercept, sigma)?)
    }
}

fn matrix(rows: &Rows, n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Validation(format!("coefficient matrices must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    /// `z_{t+δ} = x_{t+δ}`.
    Allpass,
    /// Two-sided HP(λ) trend applied to every series, truncated to `window` taps.
    Hp { lambda: f64, window: usize },
    /// Explicit `Γ_k` for lags `start, start+1, ...`.
    Custom { start: i64, weights: Vec<Rows> },
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig::Allpass
    }
}

impl TargetConfig {
    pub fn build(&self, n: usize, delta: i64) -> Result<TargetSpec> {
        Ok(match self {
            TargetConfig::Allpass => allpass_shift(n, delta),
            TargetConfig::Hp { lambda, window } => {
                if *window < 3 || window % 2 == 0 {
                    return Err(CliError::Validation(format!("hp window {window} must be odd and at least 3")));
                }
                hp_two_sided_windowed(*lambda, *window, *window)?.diagonal(n)?.with_delta(delta)
            }
            TargetConfig::Custom { start, weights } => {
                let coeffs = weights.iter().map(|m| custom_matrix(m, n)).collect::<Result<Vec<_>>>()?;
                TargetSpec::custom(LaggedFilter::new(*start, coeffs)?, delta)
            }
        })
    }
}

fn custom_matrix(rows: &Rows, n: usize) -> Result<DMatrix<f64>> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Validation(format!("target coefficients must have {n} columns")));
    }
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub ht: Option<f64>,
    pub acf: Option<f64>,
    pub length: Option<f64>,
}

impl ConstraintConfig {
    pub fn holding_time(ht: f64) -> Self {
        Self { ht: Some(ht), acf: None, length: None }
    }

    pub fn build(&self) -> Result<HtConstraint> {
        let c = match (self.ht, self.acf) {
            (Some(ht), None) => HtConstraint::holding_time(ht),
            (None, Some(acf)) => HtConstraint::acf(acf),
            _ => return Err(CliError::Validation("each constraint needs exactly one of `ht` or `acf`".into())),
        };
        let c = c.with_length(self.length.unwrap_or(1.0));
        c.rho()?;
        if !(c.length > 0.0) {
            return Err(CliError::Validation(format!("constraint length {} must be positive", c.length)));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Sample size per replication; 0 skips the simulation.
    pub samples: usize,
    pub seed: u64,
    pub replications: usize,
    pub burn_in: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { samples: 100_000, seed: 1, replications: 1, burn_in: mssa_core::processes::DEFAULT_BURN_IN }
    }
}

/// How a solved filter is scaled in the written weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Rescaled to the MSE-optimal level against the target.
    #[default]
    Mse,
    /// As returned by the solver, with the configured length.
    Length,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub lambda: f64,
    /// Target correlation of the second smoother; defaults to that of HP.
    pub ssa2_correlation: Option<f64>,
    #[serde(default = "default_sweep_step")]
    pub sweep_step: usize,
}

fn default_sweep_step() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NowcastConfig {
    /// Univariate model of the first series for the SSA benchmark.
    pub univariate: ModelConfig,
    pub ht: f64,
    pub lambda: f64,
    /// Taps of the two-sided target (odd).
    pub target_window: usize,
    /// Future observations available to the target on real data.
    pub left_tail: usize,
    #[serde(default = "default_trim")]
    pub trim_sigma: f64,
    #[serde(default = "default_ccf_lag")]
    pub ccf_max_lag: usize,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    pub data: Option<DataConfig>,
}

fn default_trim() -> f64 {
    5.0
}

fn default_ccf_lag() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub block: usize,
    pub replications: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { block: 24, replications: 500 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV with the target series (first model series).
    pub indpro: PathBuf,
    /// CSV with the leading indicator (second model series).
    pub cli: PathBuf,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    pub indpro_column: String,
    pub cli_column: String,
    /// First and last level dates kept, `YYYY-MM-DD`.
    pub start: Option<String>,
    pub end: Option<String>,
}

fn default_date_column() -> String {
    "observation_date".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative data paths are resolved against the config file
        if let (Some(dir), Some(data)) = (path.parent(), cfg.nowcast.as_mut().and_then(|n| n.data.as_mut())) {
            for p in [&mut data.indpro, &mut data.cli] {
                if p.is_relative() {
                    *p = crate::normalize(&dir.join(&*p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn model(&self) -> Result<VarmaModel> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Validation(format!("{} needs a [model] section", self.experiment.name())))?
            .build()
    }

    pub fn ht_constraints(&self) -> Result<Vec<HtConstraint>> {
        self.constraints.iter().map(ConstraintConfig::build).collect()
    }

    /// Checks everything the chosen experiment needs, before any computation.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Validation(m));
        if self.length < 2 {
            return fail(format!("length {} must be at least 2", self.length));
        }
        if self.expansion_length < self.length {
            return fail("expansion_length must be at least the filter length".into());
        }
        if self.simulation.samples > 0 && self.simulation.replications == 0 {
            return fail("simulation.replications must be positive".into());
        }
        let constraints = self.ht_constraints()?;
        match self.experiment {
            Experiment::Solve | Experiment::Var1Forecast | Experiment::Var3Smooth => {
                let model = self.model()?;
                let target = self.target.build(model.dim(), self.delta)?;
                if constraints.len() != target.dim() {
                    return fail(format!("{} constraints given for {} target series", constraints.len(), target.dim()));
                }
            }
            Experiment::WhSmooth => {
                let s = self.smoothing.as_ref().ok_or_else(|| CliError::Validation("wh-smooth needs [smoothing]".into()))?;
                if self.length % 2 == 0 {
                    return fail("wh-smooth needs an odd length".into());
                }
                if !(s.lambda > 0.0) || s.sweep_step == 0 {
                    return fail("smoothing.lambda and smoothing.sweep_step must be positive".into());
                }
            }
            Experiment::IndproNowcast => {
                let model = self.model()?;
                if model.dim() != 2 {
                    return fail("indpro-nowcast needs a bivariate model".into());
                }
                let n = self.nowcast.as_ref().ok_or_else(|| CliError::Validation("indpro-nowcast needs [nowcast]".into()))?;
                if n.univariate.build()?.dim() != 1 {
                    return fail("nowcast.univariate must be a univariate model".into());
                }
                if n.target_window % 2 == 0 || n.target_window < 3 {
                    return fail("nowcast.target_window must be odd and at least 3".into());
                }
                if n.left_tail > n.target_window / 2 {
                    return fail("nowcast.left_tail exceeds the half window".into());
                }
                if !(n.ht > 1.0) || !(n.trim_sigma > 0.0) || n.bootstrap.block == 0 {
                    return fail("nowcast.ht must exceed 1; trim_sigma and bootstrap.block must be positive".into());
                }
            }
        }
        Ok(())
    }
}
