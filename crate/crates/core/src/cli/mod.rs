//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::workflow::DagShape;
use crate::workload::TraceFormat;

#[derive(Debug, Parser)]
#[command(name = "hpcsim", version, about = "Discrete-event HPC batch scheduling and workflow simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a job trace under one scheduling policy.
    Simulate(SimulateArgs),
    /// Execute a JSON DAG workflow against its resource budget.
    Workflow(WorkflowArgs),
    /// Replay a trace under all five policies and compare wait times.
    Sweep(SweepArgs),
    /// Parse a trace and report job count and malformed lines.
    ValidateTrace(TraceArgs),
    /// Emit a seeded synthetic DAG in the workflow JSON schema.
    GenDag(GenDagArgs),
    /// Convert a metrics directory's CSV series into gnuplot data files.
    Gnuplot(GnuplotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Swf,
    Gwa,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Swf => TraceFormat::Swf,
            FormatArg::Gwa => TraceFormat::Gwa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Chain,
    ForkJoin,
    Diamond,
    Layered,
}

impl From<ShapeArg> for DagShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Chain => DagShape::Chain,
            ShapeArg::ForkJoin => DagShape::ForkJoin,
            ShapeArg::Diamond => DagShape::Diamond,
            ShapeArg::Layered => DagShape::Layered,
        }
    }
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Trace file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Swf)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    /// Schedulable units (whatever the trace's processor field counts).
    /// Defaults to the trace header's MaxProcs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub cores: Option<u64>,
    /// Memory capacity in KB; 0 leaves memory unenforced.
    #[arg(long, default_value_t = 0)]
    pub memory: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory for metrics files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportArg::Csv)]
    pub export: ExportArg,
    /// Maximum number of points in wait_cdf.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub cdf_points: u64,
    /// Also write events.csv with the full dispatch log.
    #[arg(long)]
    pub event_log: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// fcfs, backfill, bestfit, sjf or ljf.
    #[arg(long, default_value = "fcfs")]
    pub policy: String,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Stop processing events after this simulated second.
    #[arg(long)]
    pub stop_time: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WorkflowArgs {
    /// Workflow JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Override the workflow's resources_available.cpu.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub cores: Option<u64>,
    /// Override the workflow's resources_available.memory.
    #[arg(long)]
    pub memory: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub stop_time: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GenDagArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub tasks: usize,
    #[arg(long, value_enum, default_value_t = ShapeArg::Layered)]
    pub shape: ShapeArg,
    /// Workflow cpu budget.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub cpu: u64,
    /// Workflow memory budget; 0 leaves memory unenforced.
    #[arg(long, default_value_t = 0)]
    pub memory: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_task_cpu: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_execution_time: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GnuplotArgs {
    /// Directory produced by simulate/workflow.
    #[arg(long)]
    pub dir: PathBuf,
}

/// Failure categories mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}

/// Parses `args` and executes; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    match commands::execute(cli.command, out) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}
