//! Synthetic market generation with planted effects, and Monte Carlo
//! recovery checks for the estimators.
//!
//! [`generate_market`] releases land in non-overlapping square waves, draws
//! bundle sales around each analysed announcement and prices them from a
//! known log-linear model. The output has the same shape as real inputs
//! (sales CSV, waves JSON, rates CSV), so it runs through the ordinary
//! ingestion and panel pipeline.

mod config;
mod market;
mod recovery;

use thiserror::Error;

use crate::econ::EconError;
use crate::grid::GridError;
use crate::ledger::LedgerError;

pub use config::{DgpConfig, FeScales, Gamma, TokenMix, TrueBetas};
pub use market::{generate_market, SyntheticMarket};
pub use recovery::{recovery_report, write_recovery_csv, Estimates, RecoveryReport, RecoveryRow};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("map capacity: {0}")]
    Capacity(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Econ(#[from] EconError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
