pub mod nowcast;
pub mod smooth;
pub mod solve;
pub mod var1;
pub mod var3;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::output::Outcome;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Solve => solve::run(cfg),
        Experiment::Var1Forecast => var1::run(cfg),
        Experiment::WhSmooth => smooth::run(cfg),
        Experiment::Var3Smooth => var3::run(cfg),
        Experiment::IndproNowcast => nowcast::run(cfg),
    }
}
