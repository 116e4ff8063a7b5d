use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mssa_cli::config::{Experiment, ExperimentConfig};
use mssa_cli::error::{CliError, Result};
use mssa_cli::output::Outcome;
use mssa_cli::{bundled_config, experiments, fetch_data, replicate, Overrides};

#[derive(Parser)]
#[command(name = "mssa", version, about = "Holding-time constrained multivariate predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a user-specified problem (requires --config)
    Solve(Opts),
    /// One-step-ahead VAR(1) forecasts with holding-time constraints
    Var1Forecast(Opts),
    /// White-noise smoothing against the two-sided HP filter
    WhSmooth(Opts),
    /// Three-dimensional VAR(1) smoothing
    Var3Smooth(Opts),
    /// Industrial production nowcast with a leading indicator
    IndproNowcast(Opts),
    /// Run all bundled experiments and compare with the published values
    ReplicatePaper(Opts),
}

#[derive(Args)]
struct Opts {
    /// Experiment config (TOML); defaults to the bundled one
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated sample size (0 skips the simulation)
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Download the public data series before running
    #[arg(long)]
    fetch_data: bool,
}

impl Opts {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, samples: self.samples, out: self.out.clone() }
    }
}

fn load(exp: Experiment, opts: &Opts) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if exp == Experiment::Solve => return Err(CliError::Validation("solve needs --config".into())),
        None => bundled_config(exp)?,
    };
    if cfg.experiment != exp {
        return Err(CliError::Validation(format!(
            "config is for `{}`, not `{}`",
            cfg.experiment.name(),
            exp.name()
        )));
    }
    opts.overrides().apply(&mut cfg);
    Ok(cfg)
}

fn report(outcome: &Outcome) {
    for t in &outcome.tables {
        println!("{}", t.render());
    }
    for n in &outcome.notes {
        println!("note: {n}");
    }
}

fn execute(command: Command) -> Result<()> {
    let (exp, opts) = match command {
        Command::ReplicatePaper(opts) => {
            let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            if opts.fetch_data {
                fetch_data(&bundled_config(Experiment::IndproNowcast)?)?;
            }
            let outcome = replicate::run(&Overrides { out: None, ..opts.overrides() }, &out)?;
            outcome.write(&out)?;
            report(&outcome);
            return Ok(());
        }
        Command::Solve(o) => (Experiment::Solve, o),
        Command::Var1Forecast(o) => (Experiment::Var1Forecast, o),
        Command::WhSmooth(o) => (Experiment::WhSmooth, o),
        Command::Var3Smooth(o) => (Experiment::Var3Smooth, o),
        Command::IndproNowcast(o) => (Experiment::IndproNowcast, o),
    };
    let cfg = load(exp, &opts)?;
    if opts.fetch_data {
        fetch_data(&cfg)?;
    }
    let outcome = experiments::run(&cfg)?;
    let files = outcome.write(&cfg.output)?;
    report(&outcome);
    println!("wrote {} files to {}", files.len(), cfg.output.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
