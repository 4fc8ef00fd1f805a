//! `basinreach` command-line runner.
//!
//! Exit codes: 0 on success, 1 when a procedure reports a failure status,
//! 2 on configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_list, FlowDirection, Mode, Procedure, RunConfig, TargetSpec};

#[derive(Parser)]
#[command(
    name = "basinreach",
    version,
    about = "Steer gradient dynamics into a chosen critical point"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark catalog.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Forward descent or flow from `x0` (procedures `gd`, `flow`).
    Run(Inline),
    /// Build an initial point converging to a target (procedures `reach`, `reach-general`).
    Reach(Inline),
    /// Empirical stability radius of a local minimum.
    Probe(Inline),
    /// Edge-of-stability verdict on a diagonal quadratic.
    Eos(Inline),
    /// Prox identity and certificates on random samples.
    Check(Inline),
}

#[derive(Subcommand)]
enum BenchAction {
    /// Print the builtins with their critical points.
    List {
        #[arg(long)]
        json: bool,
    },
}

/// Inline flags; each overrides the matching config field.
#[derive(Args, Default)]
struct Inline {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `name[:p1,p2,…]`
    #[arg(long)]
    function: Option<String>,
    /// `constant:C` or `power:C:P`
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, value_parser = parse_procedure)]
    procedure: Option<Procedure>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long, value_parser = parse_direction)]
    direction: Option<FlowDirection>,
    /// Target point as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "target_index")]
    target: Option<String>,
    /// Target as an index into the critical-point catalog.
    #[arg(long)]
    target_index: Option<usize>,
    /// Start point as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed_radius: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_procedure(s: &str) -> Result<Procedure, String> {
    parse_enum(s)
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    parse_enum(s)
}

fn parse_direction(s: &str) -> Result<FlowDirection, String> {
    parse_enum(s)
}

impl Inline {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let point = |field: &'static str, text: &str| {
            parse_list(text).map_err(|e| CliError::config(field, e))
        };
        if let Some(v) = self.function {
            c.function = v;
        }
        if let Some(v) = self.schedule {
            c.schedule = Some(v);
        }
        if let Some(v) = self.procedure {
            c.procedure = Some(v);
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.direction {
            c.direction = v;
        }
        if let Some(v) = self.target {
            c.target = Some(TargetSpec::Point(point("target", &v)?));
        }
        if let Some(v) = self.target_index {
            c.target = Some(TargetSpec::Index(v));
        }
        if let Some(v) = self.x0 {
            c.x0 = Some(point("x0", &v)?);
        }
        c.alpha = self.alpha.or(c.alpha);
        c.delta = self.delta.or(c.delta);
        c.epsilon = self.epsilon.unwrap_or(c.epsilon);
        c.seed_radius = self.seed_radius.unwrap_or(c.seed_radius);
        c.h = self.h.unwrap_or(c.h);
        c.tol = self.tol.unwrap_or(c.tol);
        c.seed = self.seed.unwrap_or(c.seed);
        if let Some(v) = self.out {
            c.output_dir = v;
        }
        Ok(c)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            field: None,
            message: message.into(),
        }
    }

    /// Maps library errors: bad inputs are config errors, the rest are
    /// procedure failures.
    pub fn from_core(e: basinreach::Error) -> Self {
        use basinreach::Error as E;
        let field = match &e {
            E::UnknownFunction(_) => "function",
            E::InvalidParameter { name, .. } => name,
            E::DimensionMismatch { .. } | E::Precondition(_) => "target",
            E::StepTooLarge { .. } => "schedule",
            _ => return Self::failure(e.to_string()),
        };
        Self::config(field, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failure(format!("i/o: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench {
            action: BenchAction::List { json },
        } => commands::bench_list(json),
        Command::Run(a) => a.into_config().and_then(commands::run),
        Command::Reach(a) => a.into_config().and_then(commands::reach),
        Command::Probe(a) => a.into_config().and_then(commands::probe),
        Command::Eos(a) => a.into_config().and_then(commands::eos),
        Command::Check(a) => a.into_config().and_then(commands::check),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match &e.field {
                Some(field) => eprintln!("error: {field}: {}", e.message),
                None => eprintln!("error: {}", e.message),
            }
            ExitCode::from(e.code)
        }
    }
}
