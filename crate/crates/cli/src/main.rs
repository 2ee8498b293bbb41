//! `ssdre` command-line runner.
//!
//! Exit codes: 0 completed and safe, 1 usage error, 2 safety breach,
//! 3 solver failure (or a failed determinism check), 4 validation flags.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use ssdre::scenarios::{catalogue, load_scenario, self_check, Overrides, Scenario, CATALOGUE};
use ssdre::sim::{compute_metrics, simulate, ControllerKind, CostWeight, RunStatus, TrajectoryLog};

use output::{render_csv, RunSummary};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_BREACH: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_FLAGGED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ssdre", version, about = "Safe SDRE tracking control scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write its trajectory CSV and summary JSON.
    Run(RunArgs),
    /// List the built-in scenarios.
    List,
    /// Run the pointwise and barrier consistency checks of a scenario.
    Validate { scenario: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario name; omit with --all.
    #[arg(required_unless_present = "all")]
    scenario: Option<String>,
    /// Controller: ssdre, sdre or cbfqp.
    #[arg(long, value_parser = parse_kind)]
    controller: ControllerKind,
    /// Barrier weight(s): one value for all barriers or one per barrier.
    #[arg(long = "qz", num_args = 1.., value_delimiter = ',')]
    q_z: Vec<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Simulated horizon in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Controller update rate in Hz.
    #[arg(long)]
    rate: Option<f64>,
    /// Integrator step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, env = "SAFE_SDRE_OUT", default_value = "out")]
    out: PathBuf,
    /// Override file with `key = value` lines; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Simulate twice and require byte-identical CSV output.
    #[arg(long)]
    seed_check: bool,
    /// Run every scenario that supports the controller, in parallel.
    #[arg(long, conflicts_with = "scenario")]
    all: bool,
}

fn parse_kind(s: &str) -> Result<ControllerKind, String> {
    ControllerKind::parse(s).ok_or_else(|| format!("unknown controller {s:?}; expected ssdre, sdre or cbfqp"))
}

fn main() -> ExitCode {
    // clap exits with 2 on bad arguments, which would read as a safety breach
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let code = match cli.command {
        Command::List => {
            for (name, description) in CATALOGUE {
                println!("{name}\t{description}");
            }
            EXIT_OK
        }
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Run(args) => cmd_run(&args),
    };
    ExitCode::from(code)
}

fn cmd_validate(name: &str) -> u8 {
    match load_scenario(name, &Overrides::default()) {
        Ok(scenario) => {
            let report = self_check(&scenario);
            println!("{report}");
            for flag in report.flags() {
                println!("  flag: {flag}");
            }
            if report.is_clean() {
                EXIT_OK
            } else {
                EXIT_FLAGGED
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_USAGE
        }
    }
}

fn overrides_from(args: &RunArgs) -> Result<Overrides, String> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Overrides::parse(&text).map_err(|e| e.to_string())?
        }
        None => Overrides::default(),
    };
    let flags = Overrides {
        gamma: args.gamma,
        q_z: (!args.q_z.is_empty()).then(|| args.q_z.clone()),
        duration: args.duration,
        control_rate: args.rate,
        dt_integrator: args.dt,
        x0: None,
        v0: None,
    };
    Ok(base.merge(&flags))
}

fn cmd_run(args: &RunArgs) -> u8 {
    let overrides = match overrides_from(args) {
        Ok(o) => o,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    if let Err(err) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {err}", args.out.display());
        return EXIT_USAGE;
    }

    if !args.all {
        let name = args
            .scenario
            .as_deref()
            .expect("clap requires a scenario without --all");
        return run_one(name, args, &overrides);
    }

    // Only scenarios that accept the controller take part in a batch.
    let names: Vec<&str> = catalogue()
        .into_iter()
        .filter(|name| {
            load_scenario(name, &Overrides::default())
                .map(|s| s.supports(args.controller))
                .unwrap_or(false)
        })
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(names.len().max(1));
    let queue = Mutex::new(names.into_iter());
    let worst = Mutex::new(EXIT_OK);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let Some(name) = queue.lock().expect("queue lock").next() else {
                    break;
                };
                let code = run_one(name, args, &overrides);
                let mut worst = worst.lock().expect("result lock");
                *worst = severity_max(*worst, code);
            });
        }
    });
    worst.into_inner().expect("result lock")
}

/// Orders exit codes by severity: usage error > solver failure > breach > ok.
fn severity_max(a: u8, b: u8) -> u8 {
    let rank = |c: u8| match c {
        EXIT_OK => 0,
        EXIT_BREACH => 1,
        EXIT_SOLVER => 2,
        _ => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn run_one(name: &str, args: &RunArgs, overrides: &Overrides) -> u8 {
    let scenario = match load_scenario(name, overrides) {
        Ok(s) => s,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    let log = match simulate(&scenario, args.controller, &scenario.config) {
        Ok(log) => log,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_USAGE;
        }
    };
    let csv = render_csv(&log);
    if args.seed_check {
        match simulate(&scenario, args.controller, &scenario.config) {
            Ok(again) if render_csv(&again) == csv => {}
            Ok(_) => {
                eprintln!(
                    "error: {name} {}: repeated run produced different CSV output",
                    args.controller
                );
                return EXIT_SOLVER;
            }
            Err(err) => {
                eprintln!("error: {err}");
                return EXIT_USAGE;
            }
        }
    }
    let summary = summarize(&scenario, &log);
    if let Err(err) = write_outputs(&args.out, &log, &csv, &summary) {
        eprintln!("error: {err}");
        return EXIT_USAGE;
    }
    println!("{}", summary.line());
    if let Some(failure) = &log.failure {
        eprintln!("{failure}");
    }
    match log.status {
        RunStatus::Completed if summary.safety_ok => EXIT_OK,
        RunStatus::Completed | RunStatus::Breached => EXIT_BREACH,
        RunStatus::SolverFailed => EXIT_SOLVER,
    }
}

fn summarize(scenario: &Scenario, log: &TrajectoryLog) -> RunSummary {
    let cost = scenario.cost_weight.as_ref().map(|q| q.as_ref() as CostWeight<'_>);
    let metrics = compute_metrics(log, scenario.settle_threshold, scenario.config.duration, cost);
    RunSummary::new(scenario, log, &metrics)
}

fn write_outputs(dir: &Path, log: &TrajectoryLog, csv: &str, summary: &RunSummary) -> Result<(), String> {
    let stem = format!("{}_{}", log.scenario, log.controller);
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, csv).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    let json_path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(summary).map_err(|e| e.to_string())?;
    fs::write(&json_path, json + "\n").map_err(|e| format!("cannot write {}: {e}", json_path.display()))?;
    Ok(())
}
