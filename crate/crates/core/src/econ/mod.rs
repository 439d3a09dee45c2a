//! Estimation: design matrices, fixed-effect absorption, least squares and
//! the hedonic index, DiD and triple-difference estimators.
//!
//! Every estimator follows the same path: [`build_design`] turns samples into
//! a response, named regressors and fixed-effect labels;
//! [`absorb_fixed_effects`] sweeps out the group means; [`ols_fit`] solves the
//! demeaned problem by QR and attaches standard errors.

mod absorb;
mod design;
mod estimators;
mod export;
mod index;
mod ols;
mod spec;
mod trend;

use thiserror::Error;

pub use absorb::{absorb_fixed_effects, AbsorbOptions, Absorbed, Factor};
pub use design::{build_design, Design};
pub use estimators::{
    default_meta_cut, estimate, estimate_did, estimate_triple_diff, fit_design, partition_meta,
};
pub use export::{
    coefficient_json, format_table, write_coefficient_csv, write_index_csv, write_trend_csv,
    TableColumn,
};
pub use index::{hedonic_index, hedonic_observations, HedonicObservation, IndexPoint, IndexSeries};
pub use ols::{ols_fit, Coefficient, FeEstimate, FitResult, OlsOptions};
pub use spec::{term_label, Control, Dependent, FeDim, ModelSpec, SeType, Treatment};
pub use trend::{average_by_event_day, residual_trend_series, Arm, TrendRow};

#[derive(Debug, Error)]
pub enum EconError {
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(
        "fixed-effect absorption did not converge after {sweeps} sweeps (last change {change:e})"
    )]
    NonConvergence { sweeps: usize, change: f64 },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}
