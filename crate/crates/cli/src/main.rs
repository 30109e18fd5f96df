//! decoyrl: deception-aware attack simulation, attacker reward recovery,
//! and counterfactual evaluation of deception placements.
//!
//! Every command is a pure function of its flags, input files, and seed:
//! repeated runs produce byte-identical outputs. All documents embed the
//! scenario hash and a configuration echo.

mod commands;
mod docs;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use decoyrl_core::scenario::{load_scenario, Scenario};

/// The canonical fixture, compiled into the binary and used whenever
/// `--scenario` is not given.
const BUILTIN_SCENARIO: &str = include_str!("../../../fixtures/six_host.scn");
const BUILTIN_SCENARIO_LABEL: &str = "builtin:six_host.scn";

/// Ground-truth attacker reward weights shipped with the fixture.
const BUILTIN_PSI_STAR: &str = include_str!("../../../fixtures/psi_star.json");

#[derive(Parser)]
#[command(
    name = "decoyrl",
    version,
    about = "Cyber deception simulator with attacker reward recovery"
)]
struct Cli {
    /// Scenario document (defaults to the built-in six_host fixture).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Document format version to emit (only 1 is defined).
    #[arg(long, global = true, default_value_t = 1)]
    format_version: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded attacker episodes and write a trajectory log plus
    /// summary statistics.
    Simulate(commands::SimulateArgs),
    /// Recover attacker reward weights from a trajectory log.
    #[command(name = "irl-fit")]
    IrlFit(commands::FitArgs),
    /// Compare recovered weights against reference weights (EVD) and run
    /// the paired deception counterfactual.
    Eval(commands::EvalArgs),
    /// Compute ground-truth metrics and the inferred attacker profile
    /// from a trajectory log.
    Profile(commands::ProfileArgs),
    /// Run the full paired experiment and emit a comparison table plus
    /// plot-ready series files.
    Report(commands::ReportArgs),
}

/// Resolved scenario input: parsed terrain plus the label echoed into
/// output documents.
pub struct ScenarioInput {
    pub scenario: Scenario,
    pub label: String,
}

fn resolve_scenario(path: &Option<PathBuf>) -> Result<ScenarioInput> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read scenario file {}", path.display()))?;
            let scenario = load_scenario(&text)
                .with_context(|| format!("invalid scenario {}", path.display()))?;
            Ok(ScenarioInput {
                scenario,
                label: path.display().to_string(),
            })
        }
        None => Ok(ScenarioInput {
            scenario: load_scenario(BUILTIN_SCENARIO).expect("builtin fixture is valid"),
            label: BUILTIN_SCENARIO_LABEL.to_string(),
        }),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if cli.format_version != docs::DOC_FORMAT_VERSION {
        bail!(
            "unsupported format_version {} (this build emits {})",
            cli.format_version,
            docs::DOC_FORMAT_VERSION
        );
    }
    let input = resolve_scenario(&cli.scenario)?;
    match cli.command {
        Command::Simulate(args) => commands::simulate(&input, &args),
        Command::IrlFit(args) => commands::irl_fit(&input, &args),
        Command::Eval(args) => commands::eval(&input, &args),
        Command::Profile(args) => commands::profile(&input, &args),
        Command::Report(args) => commands::report(&input, &args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
