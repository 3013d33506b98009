//! Command-line front end: dataset generation, reparameterization, descriptor
//! dumps, pairwise comparison, recognition experiments and segmentation.

mod args;
mod commands;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use bilts::BiltsError;

/// Process exit status for a library error.
pub fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Config(_) => 2,
        CliError::Lib(err) => match err {
            BiltsError::Io { .. } | BiltsError::Parse { .. } | BiltsError::Schema { .. } => 1,
            BiltsError::InvalidArgument(_) => 2,
            BiltsError::Protocol(_) => 4,
            BiltsError::RotationNearPi { .. }
            | BiltsError::PureTranslation { .. }
            | BiltsError::DegenerateProgress { .. }
            | BiltsError::SingularDecomposition { .. }
            | BiltsError::SingularInvariants { .. }
            | BiltsError::IndexOutOfRange { .. }
            | BiltsError::MismatchedScale { .. }
            | BiltsError::TooShort { .. } => 3,
        },
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(BiltsError),
}

impl From<BiltsError> for CliError {
    fn from(e: BiltsError) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!("{} (dataset schema {})", bilts::VERSION, bilts::datasets::io::SCHEMA_VERSION).into_boxed_str(),
    );
    let matches = args::Cli::command().version(version).get_matches();
    let cli = match args::Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.jobs
        && let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
