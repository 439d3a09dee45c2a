use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, TimeDelta};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::absorb::Factor;
use super::design::Design;
use super::estimators::fit_design;
use super::spec::{Control, FeDim, SeType};
use super::EconError;
use crate::ledger::{
    convert_to_usd, iso_week_key, winsorize, EventSample, LedgerError, RateTable, Token,
    Transaction, WinsorBounds,
};

/// One sale as seen by the hedonic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct HedonicObservation {
    pub day: NaiveDate,
    pub log_price: f64,
    pub log_lot_size: f64,
    pub premium: bool,
    pub paid_sand: bool,
    pub paid_weth: bool,
    pub log_btc: f64,
}

impl From<&EventSample> for HedonicObservation {
    fn from(s: &EventSample) -> Self {
        Self {
            day: s.day,
            log_price: s.log_price,
            log_lot_size: s.log_lot_size,
            premium: s.premium,
            paid_sand: s.paid_sand,
            paid_weth: s.paid_weth,
            log_btc: s.log_btc,
        }
    }
}

/// Converts every cleaned transaction to a hedonic observation. Sales
/// without a token or BTC rate for their day are skipped and counted.
pub fn hedonic_observations(
    transactions: &[Transaction],
    rates: &RateTable,
    winsor: Option<WinsorBounds>,
) -> Result<(Vec<HedonicObservation>, usize), LedgerError> {
    let mut kept = Vec::new();
    let mut skipped = 0;
    for tx in transactions {
        let (Ok(usd), Ok(btc)) = (convert_to_usd(tx, rates), rates.btc(tx.date())) else {
            skipped += 1;
            continue;
        };
        kept.push((tx, usd.price_usd.expect("converted"), btc));
    }
    if kept.is_empty() {
        return Ok((Vec::new(), skipped));
    }
    let prices: Vec<f64> = kept.iter().map(|k| k.1).collect();
    let prices = match winsor {
        Some(b) => winsorize(&prices, b.lower_q, b.upper_q)?,
        None => prices,
    };
    let obs = kept
        .iter()
        .zip(prices)
        .map(|((tx, _, btc), price)| HedonicObservation {
            day: tx.date(),
            log_price: price.ln(),
            log_lot_size: (tx.lot_size() as f64).ln(),
            premium: tx.premium,
            paid_sand: tx.token == Token::Sand,
            paid_weth: tx.token == Token::Weth,
            log_btc: btc.ln(),
        })
        .collect();
    Ok((obs, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexPoint {
    /// `2021-W05` for weeks, ISO date for days.
    pub period: String,
    pub start: NaiveDate,
    pub value: f64,
}

/// Price index normalised to 1 in the first period, plus the periods inside
/// the span that had no sales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSeries {
    pub frequency: FeDim,
    pub points: Vec<IndexPoint>,
    pub gaps: Vec<IndexPoint>,
}

impl IndexSeries {
    pub fn last_value(&self) -> Option<f64> {
        self.points.last().map(|p| p.value)
    }
}

fn period_start(day: NaiveDate, frequency: FeDim) -> NaiveDate {
    match frequency {
        FeDim::Week => day - TimeDelta::days(day.weekday().num_days_from_monday() as i64),
        _ => day,
    }
}

fn period_label(start: NaiveDate, frequency: FeDim) -> String {
    match frequency {
        FeDim::Week => {
            let w = start.iso_week();
            format!("{}-W{:02}", w.year(), w.week())
        }
        _ => start.to_string(),
    }
}

fn period_key(day: NaiveDate, frequency: FeDim) -> i64 {
    match frequency {
        FeDim::Week => iso_week_key(day) as i64,
        _ => day.num_days_from_ce() as i64,
    }
}

fn control_value(o: &HedonicObservation, c: Control) -> f64 {
    let dummy = |b: bool| if b { 1.0 } else { 0.0 };
    match c {
        Control::LogLotSize => o.log_lot_size,
        Control::Premium => dummy(o.premium),
        Control::LogBtc => o.log_btc,
        Control::PaidSand => dummy(o.paid_sand),
        Control::PaidWeth => dummy(o.paid_weth),
    }
}

/// Hedonic price index from period fixed effects:
/// `index_t = exp(tau_t - tau_base)` with the first period as base.
pub fn hedonic_index(
    observations: &[HedonicObservation],
    frequency: FeDim,
    controls: &[Control],
) -> Result<IndexSeries, EconError> {
    match frequency {
        FeDim::Week | FeDim::Day => {}
        FeDim::MintWave => {
            return Err(EconError::InvalidSpec(
                "index periods must be days or weeks".into(),
            ))
        }
    }
    if frequency == FeDim::Day && controls.contains(&Control::LogBtc) {
        return Err(EconError::InvalidSpec(
            "log_btc is collinear with daily fixed effects".into(),
        ));
    }
    let starts: BTreeSet<NaiveDate> = observations
        .iter()
        .map(|o| period_start(o.day, frequency))
        .collect();
    if starts.len() < 2 {
        return Err(EconError::InsufficientData(format!(
            "index needs at least two periods with sales, found {}",
            starts.len()
        )));
    }
    let n = observations.len();
    let labels: Vec<i64> = observations
        .iter()
        .map(|o| period_key(o.day, frequency))
        .collect();
    let design = Design {
        response: DVector::from_iterator(n, observations.iter().map(|o| o.log_price)),
        regressors: DMatrix::from_fn(n, controls.len(), |i, j| {
            control_value(&observations[i], controls[j])
        }),
        names: controls.iter().map(|c| c.name().to_string()).collect(),
        factors: vec![Factor::from_labels(frequency.name(), &labels)],
    };
    let fit = fit_design(&design, SeType::Classical)?;
    let tau = &fit.fe_estimates[0];

    let first = *starts.first().expect("non-empty");
    let last = *starts.last().expect("non-empty");
    let step = if frequency == FeDim::Week { 7 } else { 1 };
    let base = tau
        .get(period_key(first, frequency))
        .expect("base period observed");
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut start = first;
    while start <= last {
        let period = period_label(start, frequency);
        match tau.get(period_key(start, frequency)) {
            Some(t) if starts.contains(&start) => points.push(IndexPoint {
                period,
                start,
                value: (t - base).exp(),
            }),
            _ => gaps.push(IndexPoint {
                period,
                start,
                value: f64::NAN,
            }),
        }
        start += TimeDelta::days(step);
    }
    if !gaps.is_empty() {
        log::warn!(
            "{} period(s) without sales left undefined in the index",
            gaps.len()
        );
    }
    Ok(IndexSeries {
        frequency,
        points,
        gaps,
    })
}
