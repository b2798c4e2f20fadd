//! Command-line front end: `run`, `batch`, `validate` and `diff`.
//!
//! Exit status is 0 when every run completes, 2 when a run ends in blackout
//! and 1 on any error. Errors go to standard error as `ERROR:<kind>: message`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::engine::{compare_runs, run_scenario, summarize, DiffReport, SimResult, Summary, Termination};
use crate::report::{emit_outputs, parse_csv, write_atomic, Emit};
use crate::scenario::{parse_scenario_file, print_scenario, AttackSpec, Scenario, ScenarioError};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "GRIDSURGE_OUT";

#[derive(Debug, Parser)]
#[command(name = "gridsurge", version, about = "Microgrid cyber-physical co-simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Integration step override, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Scenario override, `dotted.key=value` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args, Clone)]
struct Output {
    /// Comma-separated outputs: csv, json, svg, frametrace.
    #[arg(long, default_value = "csv,json")]
    emit: String,
    /// Output directory (GRIDSURGE_OUT takes precedence).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        scenario: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        /// Reference run for overlays and divergence: a result CSV or a scenario.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Run several scenarios in parallel and tabulate nadir against delay.
    Batch {
        #[arg(required = true)]
        scenarios: Vec<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
    },
    /// Parse and validate scenarios without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<String>,
        #[command(flatten)]
        common: Common,
        /// Print the canonical form of each scenario.
        #[arg(long)]
        print: bool,
    },
    /// Compare two runs channel by channel (result CSVs or scenarios).
    Diff {
        a: String,
        b: String,
        #[command(flatten)]
        common: Common,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let kind = match e {
            ScenarioError::Parse { .. } => "parse",
            ScenarioError::Validation { .. } => "validation",
            ScenarioError::Io { .. } => "io",
            ScenarioError::UnknownBuiltin(_) => "unknown_scenario",
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<crate::report::ReportError> for CliError {
    fn from(e: crate::report::ReportError) -> Self {
        CliError::new("io", e.to_string())
    }
}

fn overrides(common: &Common) -> Vec<String> {
    let mut o = common.set.clone();
    if let Some(dt) = common.dt {
        o.push(format!("scenario.dt_s={dt:?}"));
    }
    o
}

fn out_dir(output: &Output) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| output.out.clone())
}

fn load(path: &str, common: &Common) -> Result<Scenario, CliError> {
    Ok(parse_scenario_file(path, &overrides(common))?)
}

fn simulate(scenario: &Scenario) -> Result<(SimResult, Summary), CliError> {
    let result = run_scenario(scenario)?;
    if let Termination::SolverFailure { time_s, message } = &result.status {
        return Err(CliError::new("solver_failure", format!("{} at t = {time_s} s: {message}", result.scenario)));
    }
    let summary = summarize(&result).map_err(|e| CliError::new("empty_series", e.to_string()))?;
    Ok((result, summary))
}

/// A result CSV, or else a scenario (file or built-in name) that is run.
fn load_run(source: &str, common: &Common) -> Result<SimResult, CliError> {
    if Path::new(source).extension().is_some_and(|e| e == "csv") {
        let text = std::fs::read_to_string(source).map_err(|e| CliError::new("io", format!("{source}: {e}")))?;
        let name = Path::new(source).file_stem().and_then(|s| s.to_str()).unwrap_or(source);
        return parse_csv(&text, name).map_err(|e| CliError::new("parse", format!("{source}: {e}")));
    }
    Ok(simulate(&load(source, common)?)?.0)
}

fn diff(a: &SimResult, b: &SimResult) -> Result<DiffReport, CliError> {
    // A series read back from CSV carries no horizon; a run that stopped
    // early is still comparable over the samples both have.
    let mut b = b.clone();
    if b.log.is_empty() && b.duration_s <= a.duration_s {
        b.duration_s = a.duration_s;
    }
    let mut a = a.clone();
    if a.log.is_empty() && a.duration_s <= b.duration_s {
        a.duration_s = b.duration_s;
    }
    compare_runs(&a, &b).map_err(|e| CliError::new("shape_mismatch", e.to_string()))
}

fn status_line(s: &Summary) -> String {
    let end = match &s.termination {
        Termination::Completed => "completed".to_string(),
        Termination::Blackout { time_s, .. } => format!("BLACKOUT at {time_s:.3} s"),
        Termination::SolverFailure { time_s, .. } => format!("solver failure at {time_s:.3} s"),
    };
    format!(
        "{}: {end}; nadir {:.3} Hz at {:.3} s; {} trip(s); overload {:.3} s",
        s.scenario,
        s.nadir_hz,
        s.nadir_time_s,
        s.trips.len(),
        s.overload_duration_s
    )
}

fn exit_for(blackout: bool) -> i32 {
    if blackout {
        2
    } else {
        0
    }
}

/// Largest communication delay an attack imposes, for batch tables.
fn attack_delay(s: &Scenario) -> f64 {
    s.attacks
        .iter()
        .map(|a| match a {
            AttackSpec::DosFixedDelay { delay_s, .. } | AttackSpec::BreakerDelay { delay_s, .. } => *delay_s,
            _ => 0.0,
        })
        .fold(0.0, f64::max)
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { scenario, common, output, baseline } => {
            let emit = Emit::parse(&output.emit).map_err(|e| CliError::new("usage", e))?;
            let (result, summary) = simulate(&load(&scenario, &common)?)?;
            let base = baseline.as_deref().map(|b| load_run(b, &common)).transpose()?;
            let dir = out_dir(&output);
            for p in emit_outputs(&result, &summary, base.as_ref(), emit, &dir)? {
                println!("wrote {}", p.display());
            }
            println!("{}", status_line(&summary));
            if let Some(b) = &base {
                let d = diff(b, &result)?;
                match d.first_divergence_s {
                    Some(t) => println!("first divergence from baseline at {t:.6} s"),
                    None => println!("identical to baseline"),
                }
            }
            Ok(exit_for(summary.blackout))
        }
        Command::Batch { scenarios, common, output } => {
            let emit = Emit::parse(&output.emit).map_err(|e| CliError::new("usage", e))?;
            let dir = out_dir(&output);
            let loaded = scenarios.iter().map(|s| load(s, &common)).collect::<Result<Vec<_>, _>>()?;
            let runs: Vec<(f64, Summary)> = loaded
                .par_iter()
                .map(|s| -> Result<(f64, Summary), CliError> {
                    let (result, summary) = simulate(s)?;
                    emit_outputs(&result, &summary, None, emit, &dir)?;
                    Ok((attack_delay(s), summary))
                })
                .collect::<Result<_, _>>()?;
            let mut rows = runs;
            rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.scenario.cmp(&b.1.scenario)));
            let mut table =
                String::from("scenario,delay_s,nadir_hz,nadir_time_s,below_59_5_hz,below_56_hz,below_55_hz,overload_s,blackout\n");
            for (delay, s) in &rows {
                println!("{}", status_line(s));
                table.push_str(&format!(
                    "{},{delay},{},{},{},{},{},{},{}\n",
                    s.scenario,
                    s.nadir_hz,
                    s.nadir_time_s,
                    s.crossings.below_59_5_hz,
                    s.crossings.below_56_hz,
                    s.crossings.below_55_hz,
                    s.overload_duration_s,
                    s.blackout
                ));
            }
            let path = dir.join("nadir-vs-delay.csv");
            write_atomic(&path, table.as_bytes())?;
            println!("wrote {}", path.display());
            Ok(exit_for(rows.iter().any(|(_, s)| s.blackout)))
        }
        Command::Validate { scenarios, common, print } => {
            for path in &scenarios {
                let s = load(path, &common)?;
                if print {
                    print!("{}", print_scenario(&s));
                } else {
                    println!("ok {} ({})", path, s.scenario.name);
                }
            }
            Ok(0)
        }
        Command::Diff { a, b, common, json } => {
            let report = diff(&load_run(&a, &common)?, &load_run(&b, &common)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("serialisable"));
            } else {
                println!("{:<28} {:>14} {:>16}", "channel", "max |Δ|", "first diverges");
                for c in &report.channels {
                    let first = c.first_divergence_s.map_or("-".to_string(), |t| format!("{t:.6}"));
                    println!("{:<28} {:>14.6e} {:>16}", c.channel, c.max_abs_deviation, first);
                }
                if let Some((na, nb)) = report.length_mismatch {
                    println!("runs differ in length: {na} vs {nb} samples");
                }
                match report.first_divergence_s {
                    Some(t) => println!("first divergence at {t:.6} s"),
                    None => println!("identical over {} samples", report.samples_compared),
                }
            }
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and executes the command,
/// returning the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("ERROR:usage: {}", e.to_string().lines().next().unwrap_or("invalid arguments"));
            eprint!("{}", e.render());
            return 1;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ERROR:{}: {}", e.kind, e.message);
            1
        }
    }
}
