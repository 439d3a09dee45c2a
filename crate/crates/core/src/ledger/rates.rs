use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{LedgerError, Token, Transaction};

/// Daily USD rates per settlement token plus the daily BTC price, keyed by
/// UTC calendar date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    tokens: BTreeMap<(NaiveDate, Token), f64>,
    btc: BTreeMap<NaiveDate, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RateRow {
    date: NaiveDate,
    token: String,
    usd_rate: f64,
}

impl RateTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, date: NaiveDate, token: Token, usd: f64) -> Result<(), LedgerError> {
        check_positive(date, token.symbol(), usd)?;
        self.tokens.insert((date, token), usd);
        Ok(())
    }

    pub fn insert_btc(&mut self, date: NaiveDate, usd: f64) -> Result<(), LedgerError> {
        check_positive(date, "BTC", usd)?;
        self.btc.insert(date, usd);
        Ok(())
    }

    pub fn rate(&self, date: NaiveDate, token: Token) -> Result<f64, LedgerError> {
        self.tokens
            .get(&(date, token))
            .copied()
            .ok_or(LedgerError::MissingRate {
                date,
                asset: token.symbol().to_string(),
            })
    }

    pub fn btc(&self, date: NaiveDate) -> Result<f64, LedgerError> {
        self.btc
            .get(&date)
            .copied()
            .ok_or(LedgerError::MissingRate {
                date,
                asset: "BTC".into(),
            })
    }

    /// Dates in `[start, end]` lacking a token or BTC rate.
    pub fn missing_dates(&self, start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
        start
            .iter_days()
            .take_while(|d| *d <= end)
            .filter(|d| {
                !self.btc.contains_key(d)
                    || Token::ALL
                        .iter()
                        .any(|t| !self.tokens.contains_key(&(*d, *t)))
            })
            .collect()
    }

    /// Reads `date,token,usd_rate` rows; BTC rows carry the BTC price.
    /// Rows for other assets are ignored.
    pub fn read<R: Read>(reader: R) -> Result<Self, LedgerError> {
        let mut table = Self::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in rdr.deserialize::<RateRow>() {
            let row = row?;
            if row.token.eq_ignore_ascii_case("BTC") {
                table.insert_btc(row.date, row.usd_rate)?;
            } else if let Ok(token) = row.token.parse::<Token>() {
                table.insert(row.date, token, row.usd_rate)?;
            } else {
                log::debug!("ignoring rate row for {}", row.token);
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, LedgerError> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// Writes rows ordered by date, then ETH, SAND, WETH, BTC.
    pub fn write<W: Write>(&self, writer: W) -> Result<(), LedgerError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut dates: Vec<NaiveDate> = self.tokens.keys().map(|(d, _)| *d).collect();
        dates.extend(self.btc.keys().copied());
        dates.sort();
        dates.dedup();
        for date in dates {
            for token in Token::ALL {
                if let Some(r) = self.tokens.get(&(date, token)) {
                    w.serialize(RateRow {
                        date,
                        token: token.symbol().into(),
                        usd_rate: *r,
                    })?;
                }
            }
            if let Some(r) = self.btc.get(&date) {
                w.serialize(RateRow {
                    date,
                    token: "BTC".into(),
                    usd_rate: *r,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_positive(date: NaiveDate, asset: &str, v: f64) -> Result<(), LedgerError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LedgerError::InvalidRate {
            date,
            asset: asset.to_string(),
            value: v,
        })
    }
}

/// Sets `price_usd = price_token × rate(token, UTC date of the sale)`.
pub fn convert_to_usd(tx: &Transaction, rates: &RateTable) -> Result<Transaction, LedgerError> {
    let rate = rates.rate(tx.date(), tx.token)?;
    Ok(Transaction {
        price_usd: Some(tx.price_token * rate),
        ..tx.clone()
    })
}
