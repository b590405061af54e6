//! `wallsens`: batch runs of the wall solver, sensitivity tasks and the
//! validation battery.

mod config;
mod output;
mod problem;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use wallsens::cases::CaseName;

use crate::config::{FileConfig, Overrides, RunConfig, Task};
use crate::output::Artifacts;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(wallsens::Error),
    Io(std::io::Error),
    Acceptance(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::Acceptance(m) => write!(f, "acceptance: {m}"),
        }
    }
}

impl From<wallsens::Error> for CliError {
    fn from(e: wallsens::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use wallsens::Error as E;
        match self {
            CliError::Config(_) | CliError::Lib(E::InvalidInput(_) | E::Parse { .. }) => 2,
            CliError::Lib(E::Divergence { .. }) => 3,
            CliError::Lib(E::Oracle(_)) => 4,
            CliError::Acceptance(_) => 5,
            CliError::Lib(_) | CliError::Io(_) => 1,
        }
    }
}

/// Exit status: 0 success, 1 i/o, 2 configuration or invalid input,
/// 3 numerical divergence, 4 reference oracle failure, 5 failed checks.
#[derive(Debug, Parser)]
#[command(
    name = "wallsens",
    version,
    about = "Multilayer wall heat transfer and sensitivity analysis"
)]
struct Cli {
    #[arg(value_enum)]
    task: Task,
    /// validation | bayonne-synthetic | envelope
    #[arg(long)]
    case: Option<CaseName>,
    /// TOML run configuration (see docs/config.md)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grid_dx: Option<f64>,
    #[arg(long)]
    grid_dt: Option<f64>,
    /// Comma-separated parameters, e.g. k2,c2 or k1,k2,tau,rho
    #[arg(long)]
    params: Option<String>,
    /// Half-width of each parameter domain in percent of its value
    #[arg(long)]
    domain_pct: Option<f64>,
    #[arg(long)]
    lattice_n: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let case = cli.case.or(file.case);
    let needs_weather = file.weather.is_some()
        || matches!(case, Some(CaseName::BayonneSynthetic | CaseName::Envelope))
        || (case.is_none() && file.wall.is_none() && cli.task == Task::Envelope);
    let weather = problem::load_weather(file.weather.as_ref(), needs_weather)?;
    let horizon = weather
        .as_ref()
        .map(|w| problem::weather_horizon(&w.series, file.references));
    let flags = Overrides {
        case: cli.case,
        grid_dx: cli.grid_dx,
        grid_dt: cli.grid_dt,
        params: cli.params,
        domain_pct: cli.domain_pct,
        lattice_n: cli.lattice_n,
        n_samples: cli.n_samples,
        seed: cli.seed,
        out: cli.out,
    };
    let cfg = RunConfig::resolve(cli.task, file, flags, horizon)?;

    let mut inputs: Vec<PathBuf> = cli.config.into_iter().collect();
    inputs.extend(weather.as_ref().and_then(|w| w.file.clone()));
    let manifest = output::manifest(&cfg, &inputs)?;

    let mut art = Artifacts::create(&cfg.out)?;
    let outcome = tasks::run(&cfg, weather.as_ref().map(|w| &w.series), &mut art)?;
    let failed: Vec<&str> = outcome
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();

    let resolved = toml::to_string(&cfg)
        .map_err(|e| CliError::Config(format!("cannot record the config: {e}")))?;
    art.text("config.toml", &resolved)?;
    art.json("manifest.json", &manifest)?;
    let mut outputs = art.files.clone();
    outputs.push("summary.json".into());
    let summary = json!({
        "task": cfg.task,
        "status": if failed.is_empty() { "ok" } else { "checks_failed" },
        "failed_checks": failed,
        "outputs": outputs,
        "results": outcome.results,
    });
    art.json("summary.json", &summary)?;
    eprintln!(
        "wallsens {:?}: wrote {} files to {}",
        cfg.task,
        outputs.len(),
        cfg.out.display()
    );
    if !failed.is_empty() {
        return Err(CliError::Acceptance(format!(
            "{} of {} checks failed",
            failed.len(),
            outcome.checks.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
