//! The `dh` command line: scenario ingestion, command dispatch and report
//! emission. Every command prints a table to stdout and writes a JSON report
//! to `--report`; reports hold no timestamps or paths, so fixed inputs give
//! byte-identical files.

mod commands;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use decoherent_histories::search::{SearchTarget, DEFAULT_MAX_ITER, DEFAULT_RESTARTS};
use decoherent_histories::{Error as CoreError, Tolerance};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dh", version, about = "Consistency analysis of decoherent-history families")]
pub struct Cli {
    /// Absolute tolerance for every numerical comparison.
    #[arg(long, global = true, default_value_t = decoherent_histories::tolerance::DEFAULT_ATOL)]
    pub tol: f64,
    /// Where to write the JSON report.
    #[arg(long, global = true, default_value = "report.json")]
    pub report: PathBuf,
    /// Master seed for searches.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decoherence functional, probabilities and verdicts for one scenario.
    Classify { scenario: PathBuf },
    /// Tensor-product composition of two scenarios.
    Compose { a: PathBuf, b: PathBuf },
    /// Phase kick at one event, or a scan over the default coupling grid.
    Perturb {
        scenario: PathBuf,
        /// 1-based event index.
        #[arg(long)]
        event: usize,
        /// One coupling per outcome of the event, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "scan", required_unless_present = "scan")]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        scan: bool,
    },
    /// Search for a witness family.
    Search {
        #[arg(long, default_value = "weak-not-strong", value_parser = parse_target)]
        target: SearchTarget,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Number of events.
        #[arg(long, default_value_t = 2)]
        times: usize,
        #[arg(long, default_value_t = 2)]
        outcomes: usize,
        /// Required |Im D| (weak-not-strong) or amplitude phase (linear-positive-phase).
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Write the witness here as a scenario file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// End-to-end anomaly demonstrations.
    Demo { which: Demo },
    /// Emit a built-in scenario file.
    Example {
        which: Example,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Demo {
    CompositionAnomaly,
    PerturbationAnomaly,
    LinearPositivityAnomaly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Example {
    /// x basis then y basis on |0⟩: weak but not strong.
    Witness,
    /// x basis then z basis on |0⟩: linearly positive but not weak.
    XThenZ,
    /// z basis twice on |0⟩: strong.
    RepeatedZ,
}

fn parse_target(s: &str) -> Result<SearchTarget, String> {
    s.parse::<SearchTarget>().map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Exhausted(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Exhausted(_) => EXIT_EXHAUSTED,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// What a command hands back: the report body, the table, and whether it
/// ended in search exhaustion.
pub(crate) struct Outcome {
    pub body: Value,
    pub text: String,
    pub exhausted: Option<String>,
}

pub(crate) struct Context {
    pub tol: Tolerance,
    pub seed: u64,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Tables go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    execute(&cli, out, err)
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Command::Example { which, out: path } = &cli.command {
        return finish_plain(commands::example(*which, path.as_deref(), out), err);
    }
    let echo = commands::echo(cli);
    let result = Tolerance::new(cli.tol)
        .map_err(CliError::from)
        .and_then(|tol| commands::dispatch(cli, &Context { tol, seed: cli.seed }));
    let (report, code) = match result {
        Ok(outcome) => {
            let _ = out.write_all(outcome.text.as_bytes());
            let code = if let Some(reason) = &outcome.exhausted {
                let _ = writeln!(err, "search exhausted: {reason}");
                EXIT_EXHAUSTED
            } else {
                EXIT_OK
            };
            (assemble(echo, cli.tol, cli.seed, Some(outcome.body), None, code), code)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let code = e.exit_code();
            (assemble(echo, cli.tol, cli.seed, None, Some(e.to_string()), code), code)
        }
    };
    match write_report(&cli.report, &report) {
        Ok(()) => code,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write report {}: {e}", cli.report.display());
            if code == EXIT_OK {
                EXIT_NUMERIC
            } else {
                code
            }
        }
    }
}

fn finish_plain(result: Result<(), CliError>, err: &mut dyn Write) -> i32 {
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn assemble(echo: Value, tol: f64, seed: u64, body: Option<Value>, error: Option<String>, code: i32) -> Value {
    let mut report = serde_json::Map::new();
    report.insert("command".into(), echo);
    report.insert("tolerance".into(), tol.into());
    report.insert("seed".into(), seed.into());
    if let Some(Value::Object(body)) = body {
        report.extend(body);
    }
    if let Some(error) = error {
        report.insert("error".into(), error.into());
    }
    report.insert("exit_status".into(), code.into());
    Value::Object(report)
}

fn write_report(path: &Path, report: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serialises");
    text.push('\n');
    std::fs::write(path, text)
}
