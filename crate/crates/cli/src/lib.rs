//! Command-line driver: configuration, report files and the verification
//! battery.

pub mod args;
pub mod commands;
pub mod example3;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use liouville::homology::DEFAULT_CELL_BUDGET;
use liouville::model::{NaturalSystem, SystemSpec};

pub use args::{Cli, Command};

/// Environment variable overriding the vertex budget of cubical grids.
pub const BUDGET_ENV: &str = "LIOUVILLE_CELL_BUDGET";

pub const BUNDLED_SYSTEMS: &[(&str, &str)] = &[
    ("example3-n2", include_str!("../systems/example3-n2.json")),
    ("example3-n3", include_str!("../systems/example3-n3.json")),
    ("example3-n2-k2", include_str!("../systems/example3-n2-k2.json")),
    ("flat-t2", include_str!("../systems/flat-t2.json")),
    ("anisotropic-n2", include_str!("../systems/anisotropic-n2.json")),
    ("coupled-n2", include_str!("../systems/coupled-n2.json")),
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] liouville::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a finished command reports back to `main`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> ExitCode {
        if self.passed {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        }
    }
}

/// Vertex budget from the environment, or the library default.
pub fn cell_budget() -> CliResult<u64> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&b| b > 0)
            .ok_or_else(|| CliError::Config(format!("{BUDGET_ENV}={v:?} is not a positive integer"))),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_CELL_BUDGET),
        Err(e) => Err(CliError::Config(format!("{BUDGET_ENV}: {e}"))),
    }
}

/// Load the system named by `--spec` or `--system`.
pub fn load_system(args: &args::SystemArgs) -> CliResult<(SystemSpec, NaturalSystem)> {
    let text = match &args.spec {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => BUNDLED_SYSTEMS
            .iter()
            .find(|(name, _)| *name == args.system)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| {
                let names: Vec<&str> = BUNDLED_SYSTEMS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown system {:?}; bundled systems: {}",
                    args.system,
                    names.join(", ")
                ))
            })?,
    };
    let label = args
        .spec
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| args.system.clone());
    let spec: SystemSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{label}: invalid system specification: {e}")))?;
    let system = NaturalSystem::from_spec(&spec)
        .map_err(|e| CliError::Config(format!("{label}: {e}")))?;
    Ok((spec, system))
}

/// Parse and run a command line, returning the process exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(outcome) => {
            use std::io::Write;
            // a closed pipe (e.g. `| head`) must not turn a finished run into a panic
            let mut out = std::io::stdout().lock();
            for line in &outcome.summary {
                let _ = writeln!(out, "{line}");
            }
            for f in &outcome.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
