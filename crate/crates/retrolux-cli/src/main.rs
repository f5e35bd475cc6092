//! Command-line front end for the scenario harness.
//!
//! Exit codes: 0 success, 1 usage or scenario errors, 2 impossible
//! observation, 3 numerical validation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use retrolux::harness::{
    builtin, render_report, render_sweep, run_scenario, sweep, sweep_values, OutputFormat,
    RunOptions, Scenario, SweepSpec, BUILTIN_NAMES,
};
use retrolux::Error;

/// A run aborts when the dense cross-check deviates by this much.
const ORACLE_GATE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "retrolux",
    version,
    about = "Linear-optics simulator: forward photon dynamics, detection histories, \
             Bayesian retrodiction, and classical-field comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a shipped builtin.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file path.
    #[arg(value_name = "FILE", conflicts_with = "builtin")]
    file: Option<PathBuf>,

    /// Shipped scenario: single-photon, penrose-fig3, or penrose-classical.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,

    /// Detector readings like "d1=1,d4=1"; replaces the file's [observe].
    #[arg(long, value_name = "COUNTS")]
    observe: Option<String>,

    /// Parameter grid "param:lo:hi:steps"; replaces the file's [sweep].
    #[arg(long, value_name = "GRID")]
    sweep: Option<String>,

    /// Cross-check the sparse run against the dense lift; deviations of
    /// 1e-9 or more fail the run.
    #[arg(long)]
    oracle: bool,

    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,

    /// Write the report to this path instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Tsv,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err.root() {
            Error::ImpossibleObservation(_) => 2,
            Error::ScenarioSyntax { .. }
            | Error::ScenarioSemantic(_)
            | Error::ResourceLimit(_)
            | Error::InvalidArgument(_)
            | Error::NonUnitaryElement { .. } => 1,
            _ => 3,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_usage_error = err.use_stderr();
            let _ = err.print();
            return if is_usage_error {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Command::Run(args) = cli.command;
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn execute(args: RunArgs) -> Result<(), Failure> {
    let mut scenario = load_scenario(&args)?;
    if let Some(text) = &args.observe {
        scenario.observe = Some(parse_observe(text)?);
        scenario.validate().map_err(Failure::from)?;
    }
    let sweep_spec = match &args.sweep {
        Some(text) => Some(parse_sweep(text)?),
        None => scenario.sweep.clone(),
    };
    let options = RunOptions {
        oracle: args.oracle,
    };
    let format = match args.format {
        FormatArg::Table => OutputFormat::Table,
        FormatArg::Tsv => OutputFormat::Tsv,
    };

    let (rendered, oracle_deviation) = match sweep_spec {
        Some(spec) => {
            let values = sweep_values(&spec);
            let runs = sweep(&scenario, &spec.parameter, &values, &options)?;
            let worst = runs
                .iter()
                .filter_map(|(_, report)| report.oracle_max_deviation)
                .fold(0.0, f64::max);
            let deviation = args.oracle.then_some(worst);
            (render_sweep(&spec.parameter, &runs, format), deviation)
        }
        None => {
            let report = run_scenario(&scenario, &options)?;
            let deviation = report.oracle_max_deviation;
            (render_report(&report, format), deviation)
        }
    };

    match &args.out {
        Some(path) => std::fs::write(path, &rendered)
            .map_err(|err| usage(format!("cannot write {}: {err}", path.display())))?,
        None => print!("{rendered}"),
    }

    if let Some(deviation) = oracle_deviation {
        if deviation >= ORACLE_GATE {
            return Err(Failure {
                code: 3,
                message: format!(
                    "dense cross-check deviation {deviation:.3e} is at or above {ORACLE_GATE:.0e}"
                ),
            });
        }
    }
    Ok(())
}

fn load_scenario(args: &RunArgs) -> Result<Scenario, Failure> {
    match (&args.file, &args.builtin) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|err| usage(format!("cannot read {}: {err}", path.display())))?;
            let mut scenario = Scenario::parse(&text).map_err(Failure::from)?;
            scenario.name = path
                .file_stem()
                .map(|stem| stem.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            Ok(scenario)
        }
        (None, Some(name)) => builtin(name).map_err(Failure::from),
        (None, None) => Err(usage(format!(
            "give a scenario file or --builtin <name>; builtins: {}",
            BUILTIN_NAMES.join(", ")
        ))),
        (Some(_), Some(_)) => unreachable!("clap rejects file together with --builtin"),
    }
}

/// Parses "d1=1,d4=1" into 0-based (mode, count) pairs.
fn parse_observe(text: &str) -> Result<Vec<(usize, u32)>, Failure> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("bad observation '{part}', expected d<i>=<count>")))?;
        let key = key.trim();
        let mode = key
            .strip_prefix('d')
            .and_then(|rest| rest.parse::<usize>().ok())
            .filter(|&m| m >= 1)
            .ok_or_else(|| usage(format!("bad detector name '{key}', expected d1, d2, ...")))?;
        let count: u32 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad count '{}' for {key}", value.trim())))?;
        pairs.push((mode - 1, count));
    }
    Ok(pairs)
}

/// Parses "param:lo:hi:steps".
fn parse_sweep(text: &str) -> Result<SweepSpec, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(usage(format!(
            "bad sweep '{text}', expected param:lo:hi:steps"
        )));
    }
    let parameter = parts[0].trim().to_string();
    if parameter.is_empty() {
        return Err(usage("bad sweep: empty parameter name"));
    }
    let from: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad sweep bound '{}'", parts[1].trim())))?;
    let to: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad sweep bound '{}'", parts[2].trim())))?;
    let steps: usize = parts[3]
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad step count '{}'", parts[3].trim())))?;
    if steps == 0 {
        return Err(usage("bad sweep: steps must be at least 1"));
    }
    Ok(SweepSpec {
        parameter,
        from,
        to,
        steps,
    })
}
