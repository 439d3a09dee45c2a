use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{
    convert_to_usd, winsorize, LedgerError, RateTable, RejectReason, Rejection, Token, Transaction,
    WinsorBounds,
};
use crate::grid::{
    assign_near, contiguity_check, nearest_to_announcement, AnnouncementGroup,
    DEFAULT_CONTIGUITY_THRESHOLD,
};

pub const DEFAULT_WINDOW_DAYS: u32 = 7;

/// One regression row: a sale inside an announcement's event window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSample {
    pub tx_id: String,
    pub group_id: u32,
    /// Winsorized USD price.
    pub price_usd: f64,
    pub log_price: f64,
    pub distance: f64,
    pub log_distance: f64,
    pub near: bool,
    pub post: bool,
    pub multi: bool,
    pub lot_size: usize,
    pub log_lot_size: f64,
    pub premium: bool,
    pub paid_sand: bool,
    pub paid_weth: bool,
    pub log_btc: f64,
    pub mint_wave_id: u32,
    pub day: NaiveDate,
    /// ISO week as `year * 100 + week`.
    pub week: i32,
    /// Days relative to the announcement date.
    pub event_day: i64,
}

impl EventSample {
    pub fn announce_date(&self) -> NaiveDate {
        self.day - chrono::TimeDelta::days(self.event_day)
    }
}

pub fn iso_week_key(date: NaiveDate) -> i32 {
    let w = date.iso_week();
    w.year() * 100 + w.week() as i32
}

/// Inclusive range of announcement group ids kept for analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupFilter {
    pub first: u32,
    pub last: u32,
}

impl GroupFilter {
    pub fn contains(&self, group_id: u32) -> bool {
        (self.first..=self.last).contains(&group_id)
    }
}

impl Default for GroupFilter {
    /// Public Sale Wave 1 onward.
    fn default() -> Self {
        Self { first: 8, last: 17 }
    }
}

impl std::str::FromStr for GroupFilter {
    type Err = String;

    /// Parses `A..B` (inclusive) or a single id.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad group id {t:?}"))
        };
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let g = parse(s)?;
                (g, g)
            }
        };
        if first > last {
            return Err(format!("empty group range {s}"));
        }
        Ok(Self { first, last })
    }
}

#[derive(Debug, Clone)]
pub struct PanelOptions {
    pub window_days: u32,
    /// `None` keeps every group.
    pub groups: Option<GroupFilter>,
    pub contiguity_threshold: u32,
    /// `None` disables winsorization.
    pub winsor: Option<WinsorBounds>,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self {
            window_days: DEFAULT_WINDOW_DAYS,
            groups: Some(GroupFilter::default()),
            contiguity_threshold: DEFAULT_CONTIGUITY_THRESHOLD,
            winsor: Some(WinsorBounds::default()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub samples: Vec<EventSample>,
    pub rejections: Vec<Rejection>,
}

struct Window<'a> {
    group: &'a AnnouncementGroup,
    start: NaiveDate,
    end: NaiveDate,
}

impl Window<'_> {
    fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

fn window(group: &AnnouncementGroup, days: u32) -> Window<'_> {
    let span = Days::new(u64::from(days));
    Window {
        group,
        start: group.announce_date - span,
        end: group.announce_date + span,
    }
}

struct Candidate<'a> {
    tx: &'a Transaction,
    group: &'a AnnouncementGroup,
    price_usd: f64,
    btc: f64,
    distance: f64,
    mint_wave_id: u32,
}

/// Builds the event-window panel.
///
/// Sales are processed in `(timestamp, tx_id)` order. Each sale whose UTC
/// date lies within `±window_days` (inclusive) of exactly one analysed
/// announcement becomes one sample; everything else is logged as a
/// rejection. USD prices are winsorized once over the retained pool before
/// taking logs, and `near` is assigned per group at the median distance.
pub fn build_event_samples(
    transactions: &[Transaction],
    groups: &[AnnouncementGroup],
    rates: &RateTable,
    options: &PanelOptions,
) -> Result<Panel, LedgerError> {
    let keep = |g: &AnnouncementGroup| options.groups.is_none_or(|f| f.contains(g.group_id));
    let mut analysed: Vec<Window> = groups
        .iter()
        .filter(|g| keep(g))
        .map(|g| window(g, options.window_days))
        .collect();
    analysed.sort_by_key(|w| (w.group.announce_date, w.group.group_id));
    for pair in analysed.windows(2) {
        if pair[1].start <= pair[0].end {
            return Err(LedgerError::OverlappingWindows {
                first: pair[0].group.group_id,
                second: pair[1].group.group_id,
            });
        }
    }
    let excluded: Vec<Window> = groups
        .iter()
        .filter(|g| !keep(g))
        .map(|g| window(g, options.window_days))
        .collect();

    let mut order: Vec<&Transaction> = transactions.iter().collect();
    order.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.tx_id.cmp(&b.tx_id))
    });

    let mut rejections = Vec::new();
    let mut reject = |tx: &Transaction, reason: RejectReason| {
        rejections.push(Rejection {
            tx_id: tx.tx_id.clone(),
            row: None,
            reason,
        });
    };
    let mut candidates = Vec::new();
    for tx in order {
        let date = tx.date();
        let mut hits = analysed.iter().filter(|w| w.contains(date));
        let Some(hit) = hits.next() else {
            match excluded.iter().find(|w| w.contains(date)) {
                Some(w) => reject(tx, RejectReason::ExcludedGroup(w.group.group_id)),
                None => reject(tx, RejectReason::OutsideWindow),
            }
            continue;
        };
        if let Some(other) = hits.next() {
            return Err(LedgerError::AmbiguousGroup {
                tx_id: tx.tx_id.clone(),
                first: hit.group.group_id,
                second: other.group.group_id,
            });
        }
        if !contiguity_check(&tx.coords(), options.contiguity_threshold) {
            reject(tx, RejectReason::ScatteredBundle);
            continue;
        }
        let price_usd = match tx.price_usd {
            Some(p) => p,
            None => match convert_to_usd(tx, rates) {
                Ok(t) => t.price_usd.expect("set by conversion"),
                Err(e) => {
                    reject(tx, RejectReason::MissingRate(e.to_string()));
                    continue;
                }
            },
        };
        let btc = match rates.btc(date) {
            Ok(b) => b,
            Err(e) => {
                reject(tx, RejectReason::MissingRate(e.to_string()));
                continue;
            }
        };
        let nearest = nearest_to_announcement(&tx.coords(), hit.group)?;
        if nearest.distance == 0.0 {
            reject(tx, RejectReason::InsideNewRegion);
            continue;
        }
        candidates.push(Candidate {
            tx,
            group: hit.group,
            price_usd,
            btc,
            distance: nearest.distance,
            mint_wave_id: tx.parcels[nearest.parcel_index].mint_wave_id,
        });
    }

    // Near split per group, over the retained candidates.
    let mut by_group: BTreeMap<u32, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        by_group
            .entry(c.group.group_id)
            .or_default()
            .push((i, c.distance));
    }
    let mut near = vec![false; candidates.len()];
    let mut dropped = vec![false; candidates.len()];
    for (group_id, members) in &by_group {
        match assign_near(members) {
            Ok(split) => {
                for (i, is_near) in split {
                    near[i] = is_near;
                }
            }
            Err(_) => {
                for (i, _) in members {
                    dropped[*i] = true;
                }
                log::warn!("group {group_id} has fewer than 2 samples; dropped");
            }
        }
    }
    let mut retained = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.into_iter().enumerate() {
        if dropped[i] {
            reject(c.tx, RejectReason::DegenerateGroup(c.group.group_id));
        } else {
            retained.push((c, near[i]));
        }
    }

    let raw_prices: Vec<f64> = retained.iter().map(|(c, _)| c.price_usd).collect();
    let prices = match (options.winsor, raw_prices.is_empty()) {
        (Some(b), false) => winsorize(&raw_prices, b.lower_q, b.upper_q)?,
        _ => raw_prices,
    };

    let samples = retained
        .into_iter()
        .zip(prices)
        .map(|((c, near), price_usd)| {
            let day = c.tx.date();
            let announce = c.group.announce_date;
            EventSample {
                tx_id: c.tx.tx_id.clone(),
                group_id: c.group.group_id,
                price_usd,
                log_price: price_usd.ln(),
                distance: c.distance,
                log_distance: c.distance.ln(),
                near,
                post: day >= announce,
                multi: c.group.multi,
                lot_size: c.tx.lot_size(),
                log_lot_size: (c.tx.lot_size() as f64).ln(),
                premium: c.tx.premium,
                paid_sand: c.tx.token == Token::Sand,
                paid_weth: c.tx.token == Token::Weth,
                log_btc: c.btc.ln(),
                mint_wave_id: c.mint_wave_id,
                day,
                week: iso_week_key(day),
                event_day: (day - announce).num_days(),
            }
        })
        .collect();
    Ok(Panel {
        samples,
        rejections,
    })
}

/// Panel export: one sample per row, columns named after the fields.
pub fn write_panel<W: Write>(writer: W, samples: &[EventSample]) -> Result<(), LedgerError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_panel<R: Read>(reader: R) -> Result<Vec<EventSample>, LedgerError> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<Result<Vec<_>, _>>()?)
}
