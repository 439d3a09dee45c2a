//! Spatial difference-in-differences toolkit for gridded virtual land markets.
//!
//! The crate is organised as a pipeline:
//!
//! - [`grid`]: parcel coordinates, wave regions and spatial treatment assignment.
//! - [`ledger`]: transaction ingestion, currency conversion, winsorization and
//!   the event-window regression panel.
//! - [`econ`]: fixed-effect absorption, least squares, and the hedonic index,
//!   DiD and triple-difference estimators.
//! - [`synth`]: a synthetic land market with planted coefficients for
//!   ground-truth recovery.

pub mod econ;
pub mod grid;
pub mod ledger;
pub mod stats;
pub mod synth;

pub use econ::{EconError, FitResult, ModelSpec};
pub use grid::{AnnouncementGroup, Coord, GridError, Region, Wave};
pub use ledger::{EventSample, LedgerError, RateTable, Token, Transaction};
pub use synth::{DgpConfig, SynthError, SyntheticMarket};
