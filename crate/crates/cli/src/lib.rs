//! Batch driver for the gridhedonic pipeline: simulate markets, build the
//! event-window panel, run the estimator battery and write plot-ready
//! series. Every output file is written atomically and is byte-identical
//! across reruns with the same inputs and seed.

mod commands;
mod error;
mod output;

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridhedonic::econ::{FeDim, SeType, Treatment};
use gridhedonic::ledger::{GroupFilter, DEFAULT_WINDOW_DAYS};

pub use commands::{
    cmd_estimate, cmd_index, cmd_panel, cmd_recover, cmd_simulate, cmd_trend, EstimateSummary,
};
pub use error::CliError;
pub use output::OutDir;

#[derive(Debug, Parser)]
#[command(
    name = "gridhedonic",
    version,
    about = "Hedonic and event-window price analysis for grid land markets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic market: waves.json, transactions.csv, rates.csv, truth.json.
    Simulate(SimulateArgs),
    /// Clean transactions and write the event-window panel with its rejection log.
    Panel(PanelArgs),
    /// Run the DiD and triple-difference battery.
    Estimate(EstimateArgs),
    /// Weekly or daily hedonic price index.
    Index(IndexArgs),
    /// Mean residual log price by event day for near and far sales.
    Trend(PanelArgs),
    /// Monte Carlo recovery of planted coefficients.
    Recover(RecoverArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreatmentArg {
    Near,
    Logdist,
}

impl From<TreatmentArg> for Treatment {
    fn from(t: TreatmentArg) -> Self {
        match t {
            TreatmentArg::Near => Treatment::DiscreteNear,
            TreatmentArg::Logdist => Treatment::ContinuousLogDistance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeArg {
    Week,
    Day,
}

impl From<FeArg> for FeDim {
    fn from(f: FeArg) -> Self {
        match f {
            FeArg::Week => FeDim::Week,
            FeArg::Day => FeDim::Day,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeArg {
    Classical,
    Hc1,
}

impl From<SeArg> for SeType {
    fn from(s: SeArg) -> Self {
        match s {
            SeArg::Classical => SeType::Classical,
            SeArg::Hc1 => SeType::Hc1,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Generator config (JSON); omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub transactions: PathBuf,
    #[arg(long)]
    pub waves: PathBuf,
    #[arg(long)]
    pub rates: PathBuf,
    /// NFT id to parcel map (JSON); by default ids resolve as x + y * map size.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = gridhedonic::grid::DEFAULT_MAP_SIZE)]
    pub map_size: u32,
    /// Issuer address whose sales are primary; repeatable.
    #[arg(long = "creator")]
    pub creators: Vec<String>,
    /// Skip price winsorization.
    #[arg(long)]
    pub no_winsor: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PanelArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, default_value_t = DEFAULT_WINDOW_DAYS)]
    pub window_days: u32,
    /// Announcement groups to keep, e.g. `8..17`.
    #[arg(long, default_value = "8..17")]
    pub groups: GroupFilter,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Restrict the battery to one treatment definition.
    #[arg(long, value_enum)]
    pub treatment: Option<TreatmentArg>,
    /// Time effects for the headline specifications.
    #[arg(long, value_enum, default_value_t = FeArg::Day)]
    pub fe: FeArg,
    #[arg(long, value_enum, default_value_t = SeArg::Classical)]
    pub se: SeArg,
    /// Run only the triple-difference specifications.
    #[arg(long)]
    pub multi: bool,
    /// Also estimate the headline specifications before and after this date.
    #[arg(long)]
    pub meta_cut: Option<NaiveDate>,
}

#[derive(Debug, Clone, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, value_enum, default_value_t = FeArg::Week)]
    pub fe: FeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    /// Defaults to the treatment the config plants.
    #[arg(long, value_enum)]
    pub treatment: Option<TreatmentArg>,
    /// Estimate the triple-difference specification.
    #[arg(long)]
    pub multi: bool,
    #[arg(long, value_enum, default_value_t = SeArg::Classical)]
    pub se: SeArg,
    /// Skip price winsorization.
    #[arg(long)]
    pub no_winsor: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Panel(a) => cmd_panel(a),
        Command::Estimate(a) => cmd_estimate(a).map(|summary| print!("{}", summary.report)),
        Command::Index(a) => cmd_index(a),
        Command::Trend(a) => cmd_trend(a),
        Command::Recover(a) => cmd_recover(a),
    }
}
