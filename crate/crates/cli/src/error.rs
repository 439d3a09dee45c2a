use std::path::PathBuf;

use gridhedonic::{EconError, GridError, LedgerError, SynthError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("input not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: Box<CliError>,
    },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_file(path: impl Into<PathBuf>, source: impl Into<CliError>) -> Self {
        CliError::Input {
            path: path.into(),
            source: Box::new(source.into()),
        }
    }

    /// 1 for I/O, 2 for configuration or validation, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::MissingInput(_) => 2,
            CliError::Input { source, .. } => source.exit_code(),
            CliError::Ledger(e) => ledger_code(e),
            CliError::Grid(e) => grid_code(e),
            CliError::Econ(e) => econ_code(e),
            CliError::Synth(e) => match e {
                SynthError::Io(_) => 1,
                SynthError::Ledger(e) => ledger_code(e),
                SynthError::Grid(e) => grid_code(e),
                SynthError::Econ(e) => econ_code(e),
                SynthError::Csv(e) if e.is_io_error() => 1,
                _ => 2,
            },
            CliError::Numerical(_) => 3,
        }
    }
}

fn ledger_code(e: &LedgerError) -> i32 {
    match e {
        LedgerError::Io(_) => 1,
        LedgerError::Csv(c) if c.is_io_error() => 1,
        LedgerError::Json(j) if j.is_io() => 1,
        LedgerError::Grid(g) => grid_code(g),
        _ => 2,
    }
}

fn grid_code(e: &GridError) -> i32 {
    match e {
        GridError::Io(_) => 1,
        GridError::Json(j) if j.is_io() => 1,
        _ => 2,
    }
}

fn econ_code(e: &EconError) -> i32 {
    match e {
        EconError::InvalidSpec(_) => 2,
        _ => 3,
    }
}
