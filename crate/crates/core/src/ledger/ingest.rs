use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize};

use super::{LandParcel, LedgerError, RejectReason, Rejection, Token, Transaction};
use crate::grid::{Coord, Wave};

/// Seller address treated as the land issuer by default.
pub const DEFAULT_CREATOR_ADDRESS: &str = "0x0000000000000000000000000000000000000000";

/// Token id of a parcel under the row-major convention `x + y * map_size`.
pub fn nft_id(c: Coord, map_size: u32) -> u64 {
    u64::from(c.x) + u64::from(c.y) * u64::from(map_size)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParcelInfo {
    pub coord: [u32; 2],
    pub mint_wave_id: u32,
}

/// NFT id → coordinates and mint wave.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MapMetadata {
    parcels: BTreeMap<u64, ParcelInfo>,
}

impl MapMetadata {
    pub fn new(parcels: BTreeMap<u64, ParcelInfo>) -> Self {
        Self { parcels }
    }

    /// Derives metadata from wave geometry: every parcel of a wave region is
    /// minted by that wave and carries id `x + y * map_size`.
    pub fn from_waves(waves: &[Wave], map_size: u32) -> Self {
        let mut parcels = BTreeMap::new();
        for w in waves {
            for c in w.region.parcels() {
                parcels.entry(nft_id(*c, map_size)).or_insert(ParcelInfo {
                    coord: [c.x, c.y],
                    mint_wave_id: w.wave_id,
                });
            }
        }
        Self { parcels }
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn resolve(&self, id: u64) -> Option<LandParcel> {
        self.parcels.get(&id).map(|info| LandParcel {
            nft_id: id,
            coord: crate::grid::Coord::new(info.coord[0], info.coord[1]),
            mint_wave_id: info.mint_wave_id,
        })
    }

    pub fn len(&self) -> usize {
        self.parcels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parcels.is_empty()
    }
}

/// One row of the transaction dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSale {
    pub tx_id: String,
    pub timestamp_iso8601: String,
    /// `;`-separated NFT ids.
    pub nft_ids: String,
    pub lot_size: usize,
    #[serde(deserialize_with = "flag")]
    pub premium: bool,
    pub token: String,
    pub price_token: f64,
    pub seller: String,
    pub buyer: String,
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("invalid flag {other:?}"))),
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Sellers whose sales are primary (issuer) sales.
    pub creator_addresses: BTreeSet<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            creator_addresses: BTreeSet::from([DEFAULT_CREATOR_ADDRESS.to_string()]),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub transactions: Vec<Transaction>,
    pub rejections: Vec<Rejection>,
}

/// Reads a CSV dump and keeps paid secondary sales in ETH, SAND or wETH.
///
/// Checks run in a fixed order (malformed fields, zero payment, token,
/// primary sale, id resolution) and each rejected row is logged once with
/// the first failing reason.
pub fn ingest_transactions<R: Read>(
    reader: R,
    metadata: &MapMetadata,
    options: &IngestOptions,
) -> Result<Ingested, LedgerError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut rows = Vec::new();
    let mut out = Ingested::default();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.rejections.push(Rejection {
                    tx_id: String::new(),
                    row: Some(row),
                    reason: RejectReason::Malformed(e.to_string()),
                });
                continue;
            }
        };
        match record.deserialize::<RawSale>(Some(&headers)) {
            Ok(sale) => rows.push((row, sale)),
            Err(e) => out.rejections.push(Rejection {
                tx_id: record.get(0).unwrap_or_default().to_string(),
                row: Some(row),
                reason: RejectReason::Malformed(e.to_string()),
            }),
        }
    }
    let rest = ingest_records(rows, metadata, options);
    out.transactions = rest.transactions;
    out.rejections.extend(rest.rejections);
    out.rejections.sort_by_key(|r| r.row);
    Ok(out)
}

pub fn ingest_file(
    path: &Path,
    metadata: &MapMetadata,
    options: &IngestOptions,
) -> Result<Ingested, LedgerError> {
    ingest_transactions(BufReader::new(File::open(path)?), metadata, options)
}

/// Applies the sale filters to already parsed rows `(row_number, sale)`.
pub fn ingest_records<I>(rows: I, metadata: &MapMetadata, options: &IngestOptions) -> Ingested
where
    I: IntoIterator<Item = (usize, RawSale)>,
{
    let mut out = Ingested::default();
    for (row, sale) in rows {
        match screen(&sale, metadata, options) {
            Ok(tx) => out.transactions.push(tx),
            Err(reason) => {
                log::debug!("rejecting {} (row {row}): {reason}", sale.tx_id);
                out.rejections.push(Rejection {
                    tx_id: sale.tx_id,
                    row: Some(row),
                    reason,
                });
            }
        }
    }
    out
}

fn screen(
    sale: &RawSale,
    metadata: &MapMetadata,
    options: &IngestOptions,
) -> Result<Transaction, RejectReason> {
    let timestamp = DateTime::parse_from_rfc3339(sale.timestamp_iso8601.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| RejectReason::Malformed(format!("timestamp: {e}")))?;
    let ids = sale
        .nft_ids
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| RejectReason::Malformed(format!("nft id {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ids.is_empty() {
        return Err(RejectReason::Malformed("no nft ids".into()));
    }
    if ids.len() != sale.lot_size {
        return Err(RejectReason::Malformed(format!(
            "lot_size {} but {} nft ids",
            sale.lot_size,
            ids.len()
        )));
    }
    if !sale.price_token.is_finite() || sale.price_token < 0.0 {
        return Err(RejectReason::Malformed(format!(
            "price {}",
            sale.price_token
        )));
    }
    if sale.price_token == 0.0 {
        return Err(RejectReason::ZeroPayment);
    }
    let token: Token = sale.token.parse().map_err(RejectReason::UnsupportedToken)?;
    if options
        .creator_addresses
        .iter()
        .any(|a| a.eq_ignore_ascii_case(sale.seller.trim()))
    {
        return Err(RejectReason::PrimarySale);
    }
    let parcels = ids
        .iter()
        .map(|id| {
            metadata
                .resolve(*id)
                .ok_or_else(|| RejectReason::UnresolvableNft(id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Transaction {
        tx_id: sale.tx_id.clone(),
        timestamp,
        parcels,
        premium: sale.premium,
        token,
        price_token: sale.price_token,
        price_usd: None,
        seller: sale.seller.clone(),
        buyer: sale.buyer.clone(),
    })
}
