//! `misspec`: run posterior experiments, assumption checks and the
//! counterexamples from a TOML config or from flags.
//!
//! Exit status: 0 on success, 2 when a checker reports `fails`, 1 on any
//! error.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use misspec::report::Format;
use serde_json::Value;

use crate::commands::Outcome;
use crate::config::*;
use crate::error::CliError;

/// Thread count for the replication runners.
const THREADS_ENV: &str = "MISSPEC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "misspec", version, about = "Posterior concentration under misspecification")]
struct Cli {
    /// TOML file with a `command` key and a table of parameters for it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report file; without it only the summary is printed.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// KL, KL excess, affinities and L1 distances for one member.
    Divergence(DivergenceParams),
    /// KL projection of the truth onto a finite family.
    Project(ProjectParams),
    /// Posterior mass of ball complements along simulated samples.
    Trajectory(TrajectoryParams),
    /// Numerical check of a concentration assumption.
    Check(CheckParams),
    /// Reproduce a counterexample (`example1` or `example2`).
    Counterexample(CounterexampleParams),
    /// Regression with fixed covariates: sup-norm posterior mass.
    #[command(name = "inid-run")]
    InidRun(InidParams),
    /// Grid of normal location mixtures with weak neighborhoods.
    Mixture(MixtureParams),
    /// Check the config without running it and print the resolved values.
    Validate,
}

impl Cmd {
    fn name(&self) -> Option<&'static str> {
        Some(match self {
            Cmd::Divergence(_) => "divergence",
            Cmd::Project(_) => "project",
            Cmd::Trajectory(_) => "trajectory",
            Cmd::Check(_) => "check",
            Cmd::Counterexample(_) => "counterexample",
            Cmd::InidRun(_) => "inid-run",
            Cmd::Mixture(_) => "mixture",
            Cmd::Validate => return None,
        })
    }
}

enum Resolved {
    Divergence(DivergenceParams),
    Project(ProjectParams),
    Trajectory(TrajectoryParams),
    Check(CheckParams),
    Counterexample(CounterexampleParams),
    InidRun(InidParams),
    Mixture(MixtureParams),
}

fn merge<P: Params>(file: Option<&FileConfig>, flags: Option<&P>) -> Result<P, CliError> {
    let base = match file {
        Some(f) => f.params::<P>()?,
        None => P::default(),
    };
    match flags {
        Some(fl) => overlay(base, fl),
        None => base,
    }
    .resolve()
}

fn resolve(cli: &Cli) -> Result<(Global, Resolved), CliError> {
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    let command = match (cli.cmd.as_ref().and_then(Cmd::name), &file) {
        (Some(c), Some(f)) if c != f.command => {
            return Err(CliError::Config(format!(
                "command: config file is for {:?} but {c:?} was requested",
                f.command
            )))
        }
        (Some(c), _) => c.to_string(),
        (None, Some(f)) => f.command.clone(),
        (None, None) => return Err(CliError::Config("command: none given (use a subcommand or --config)".into())),
    };
    let seed = match (cli.seed, file.as_ref().and_then(|f| f.seed)) {
        (Some(s), _) => Some(s),
        (None, Some(s)) if s < 0 => return Err(CliError::Config(format!("seed: must be nonnegative (got {s})"))),
        (None, s) => s.map(|s| s as u64),
    };
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Jsonl) => Format::Jsonl,
        None => file.as_ref().and_then(|f| f.format).unwrap_or(Format::Csv),
    };
    let output = cli.output.clone().or_else(|| file.as_ref().and_then(|f| f.output.clone()));
    let g = Global {
        command,
        seed,
        format,
        output,
    };
    let file = file.as_ref();
    let r = match g.command.as_str() {
        "divergence" => Resolved::Divergence(merge(file, flags!(cli, Divergence))?),
        "project" => Resolved::Project(merge(file, flags!(cli, Project))?),
        "trajectory" => Resolved::Trajectory(merge(file, flags!(cli, Trajectory))?),
        "check" => Resolved::Check(merge(file, flags!(cli, Check))?),
        "counterexample" => Resolved::Counterexample(merge(file, flags!(cli, Counterexample))?),
        "inid-run" => Resolved::InidRun(merge(file, flags!(cli, InidRun))?),
        "mixture" => Resolved::Mixture(merge(file, flags!(cli, Mixture))?),
        other => unreachable!("unknown command {other}"),
    };
    let sampling = match &r {
        Resolved::Trajectory(_) => TrajectoryParams::SAMPLING,
        Resolved::InidRun(_) => InidParams::SAMPLING,
        Resolved::Mixture(_) => MixtureParams::SAMPLING,
        Resolved::Counterexample(p) => p.id.as_deref() == Some("example2"),
        _ => false,
    };
    if sampling {
        g.require_seed()?;
    }
    Ok((g, r))
}

macro_rules! flags {
    ($cli:expr, $v:ident) => {
        match &$cli.cmd {
            Some(Cmd::$v(p)) => Some(p),
            _ => None,
        }
    };
}
use flags;

impl Resolved {
    fn params_json(&self) -> Value {
        let v = match self {
            Resolved::Divergence(p) => serde_json::to_value(p),
            Resolved::Project(p) => serde_json::to_value(p),
            Resolved::Trajectory(p) => serde_json::to_value(p),
            Resolved::Check(p) => serde_json::to_value(p),
            Resolved::Counterexample(p) => serde_json::to_value(p),
            Resolved::InidRun(p) => serde_json::to_value(p),
            Resolved::Mixture(p) => serde_json::to_value(p),
        };
        strip_nulls(v.expect("params serialize"))
    }

    fn run(&self, g: &Global) -> Result<Outcome, CliError> {
        match self {
            Resolved::Divergence(p) => commands::divergence(p),
            Resolved::Project(p) => commands::project(p),
            Resolved::Trajectory(p) => commands::trajectory(p, g.require_seed()?),
            Resolved::Check(p) => commands::check(p),
            Resolved::Counterexample(p) => commands::counterexample(p, g),
            Resolved::InidRun(p) => commands::inid(p, g.require_seed()?),
            Resolved::Mixture(p) => commands::mixture(p, g.require_seed()?),
        }
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip_nulls(v))).collect()),
        Value::Array(a) => Value::Array(a.into_iter().map(strip_nulls).collect()),
        other => other,
    }
}

/// The fully resolved configuration, as embedded in every output file.
fn echo(g: &Global, r: &Resolved) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), Value::String(g.command.clone()));
    if let Some(s) = g.seed {
        m.insert("seed".into(), s.into());
    }
    m.insert("format".into(), serde_json::to_value(g.format).unwrap());
    m.insert(g.command.clone(), r.params_json());
    Value::Object(m)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let (g, r) = resolve(cli)?;
    let echo = echo(&g, &r);
    let mut out = std::io::stdout().lock();
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    if matches!(cli.cmd, Some(Cmd::Validate)) {
        let toml = toml::to_string(&echo).map_err(|e| CliError::Config(e.to_string()))?;
        write!(out, "ok\n{toml}").map_err(io)?;
        return Ok(false);
    }
    let mut outcome = r.run(&g)?;
    outcome.report.config = echo;
    write!(out, "{}", outcome.table).map_err(io)?;
    if let Some(path) = &g.output {
        let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        outcome.report.write(&mut w, g.format)?;
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writeln!(out, "wrote {} rows to {}", outcome.report.rows.len(), path.display()).map_err(io)?;
    }
    Ok(outcome.failed)
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: expected a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match threads().and_then(|_| execute(&cli)) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", e.normalize());
            ExitCode::from(1)
        }
    }
}
