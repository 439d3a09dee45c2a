//! Transaction ingestion, cleaning and construction of the event-window panel.
//!
//! Raw marketplace dumps are resolved against map metadata, filtered down to
//! paid secondary sales in ETH, SAND or wETH, converted to USD with daily
//! rates, and turned into [`EventSample`] rows around each announcement.

mod ingest;
mod panel;
mod rates;
mod summary;
mod winsor;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Coord, GridError};

pub use ingest::{
    ingest_file, ingest_records, ingest_transactions, nft_id, IngestOptions, Ingested, MapMetadata,
    ParcelInfo, RawSale, DEFAULT_CREATOR_ADDRESS,
};
pub use panel::{
    build_event_samples, iso_week_key, read_panel, write_panel, EventSample, GroupFilter, Panel,
    PanelOptions, DEFAULT_WINDOW_DAYS,
};
pub use rates::{convert_to_usd, RateTable};
pub use summary::{summary_stats, write_summary, SummaryRow};
pub use winsor::{winsorize, WinsorBounds};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no {asset} rate for {date}")]
    MissingRate { date: NaiveDate, asset: String },
    #[error("rate for {asset} on {date} must be positive, got {value}")]
    InvalidRate {
        date: NaiveDate,
        asset: String,
        value: f64,
    },
    #[error("event windows of groups {first} and {second} overlap")]
    OverlappingWindows { first: u32, second: u32 },
    #[error("transaction {tx_id} falls in the windows of groups {first} and {second}")]
    AmbiguousGroup {
        tx_id: String,
        first: u32,
        second: u32,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Settlement currency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Token {
    Eth,
    Sand,
    Weth,
}

impl Token {
    pub const ALL: [Token; 3] = [Token::Eth, Token::Sand, Token::Weth];

    pub fn symbol(self) -> &'static str {
        match self {
            Token::Eth => "ETH",
            Token::Sand => "SAND",
            Token::Weth => "WETH",
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Token {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ETH" => Ok(Token::Eth),
            "SAND" => Ok(Token::Sand),
            "WETH" => Ok(Token::Weth),
            other => Err(other.to_string()),
        }
    }
}

/// A transacted parcel, resolved from its NFT id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LandParcel {
    pub nft_id: u64,
    pub coord: Coord,
    /// Wave in which the parcel was minted.
    pub mint_wave_id: u32,
}

/// One paid secondary-market sale.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub tx_id: String,
    pub timestamp: DateTime<Utc>,
    pub parcels: Vec<LandParcel>,
    pub premium: bool,
    pub token: Token,
    pub price_token: f64,
    /// Filled by [`convert_to_usd`].
    pub price_usd: Option<f64>,
    pub seller: String,
    pub buyer: String,
}

impl Transaction {
    pub fn lot_size(&self) -> usize {
        self.parcels.len()
    }

    pub fn coords(&self) -> Vec<Coord> {
        self.parcels.iter().map(|p| p.coord).collect()
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// Why a record did not make it into the panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum RejectReason {
    Malformed(String),
    UnresolvableNft(String),
    ZeroPayment,
    UnsupportedToken(String),
    PrimarySale,
    OutsideWindow,
    ExcludedGroup(u32),
    ScatteredBundle,
    MissingRate(String),
    InsideNewRegion,
    DegenerateGroup(u32),
}

impl RejectReason {
    /// Stable short code used in rejection logs.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Malformed(_) => "malformed",
            Self::UnresolvableNft(_) => "unresolvable_nft",
            Self::ZeroPayment => "zero_payment",
            Self::UnsupportedToken(_) => "unsupported_token",
            Self::PrimarySale => "primary_sale",
            Self::OutsideWindow => "outside_window",
            Self::ExcludedGroup(_) => "excluded_group",
            Self::ScatteredBundle => "scattered_bundle",
            Self::MissingRate(_) => "missing_rate",
            Self::InsideNewRegion => "inside_new_region",
            Self::DegenerateGroup(_) => "degenerate_group",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            Self::Malformed(s) | Self::UnresolvableNft(s) | Self::UnsupportedToken(s) => s.clone(),
            Self::MissingRate(s) => s.clone(),
            Self::ExcludedGroup(g) | Self::DegenerateGroup(g) => format!("group {g}"),
            _ => String::new(),
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = self.detail();
        if detail.is_empty() {
            f.write_str(self.code())
        } else {
            write!(f, "{}: {}", self.code(), detail)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub tx_id: String,
    /// 1-based data row in the source file, when known.
    pub row: Option<usize>,
    pub reason: RejectReason,
}

/// Writes `tx_id,row,reason,detail` rows.
pub fn write_rejections<W: std::io::Write>(
    writer: W,
    rejections: &[Rejection],
) -> Result<(), LedgerError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tx_id", "row", "reason", "detail"])?;
    for r in rejections {
        let row = r.row.map(|n| n.to_string()).unwrap_or_default();
        w.write_record([
            r.tx_id.as_str(),
            row.as_str(),
            r.reason.code(),
            &r.reason.detail(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
