mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use gradval::harness::FailureKind;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Core(gradval::Error),
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    /// An experiment finished but some replicate stages failed.
    Stage { kind: FailureKind, message: String },
}

impl From<gradval::Error> for CliError {
    fn from(e: gradval::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// `(kind, exit code)` following the table in `--help`.
    fn classify(&self) -> (&'static str, u8) {
        match self {
            CliError::Core(e) if e.is_divergence() => ("divergence", 4),
            CliError::Core(e) if e.is_io() => ("io", 3),
            CliError::Core(gradval::Error::InvalidConfig(_)) => ("config", 2),
            CliError::Core(_) => ("other", 1),
            CliError::Usage(_) => ("usage", 2),
            CliError::Io { .. } => ("io", 3),
            CliError::Stage { kind, .. } => match kind {
                FailureKind::Divergence => ("divergence", 4),
                FailureKind::Io => ("io", 3),
                FailureKind::Other => ("other", 1),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Stage { message: m, .. } => m.clone(),
            CliError::Io { path, source } => format!("I/O error on {}: {source}", path.display()),
        }
    }
}

fn fail(kind: &str, code: u8, message: &str) -> ExitCode {
    let one_line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("gradval: error[{kind}]: {one_line}");
    ExitCode::from(code)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {jobs} worker threads: {e}")))?;
    }
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Corrupt(a) => commands::corrupt(a),
        Command::Value(a) => commands::value(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::FilterCurve(a) => commands::filter(a),
        Command::Discovery(a) => commands::discovery_curve(a),
        Command::Apc(a) => commands::apc_report(a),
        Command::Run(a) => commands::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return fail("usage", 2, first.trim_start_matches("error: "));
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = e.classify();
            fail(kind, code, &e.message())
        }
    }
}
