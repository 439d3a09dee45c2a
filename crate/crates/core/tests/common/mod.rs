#![allow(dead_code)]

use chrono::{NaiveDate, TimeDelta};
use gridhedonic::ledger::iso_week_key;
use gridhedonic::EventSample;

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

/// A sample with neutral covariates; callers override what they need.
pub fn sample(near: bool, post: bool, multi: bool, log_price: f64) -> EventSample {
    let announce = date("2021-03-10");
    let event_day = if post { 1 } else { -1 };
    let day = announce + TimeDelta::days(event_day);
    EventSample {
        tx_id: String::new(),
        group_id: 8,
        price_usd: log_price.exp(),
        log_price,
        distance: if near { 3.0 } else { 30.0 },
        log_distance: if near { 3f64.ln() } else { 30f64.ln() },
        near,
        post,
        multi,
        lot_size: 1,
        log_lot_size: 0.0,
        premium: false,
        paid_sand: false,
        paid_weth: false,
        log_btc: 10.0,
        mint_wave_id: 1,
        day,
        week: iso_week_key(day),
        event_day,
    }
}

/// Moves a sample onto another announcement and event day.
pub fn place(
    mut s: EventSample,
    group_id: u32,
    announce: NaiveDate,
    event_day: i64,
) -> EventSample {
    s.group_id = group_id;
    s.event_day = event_day;
    s.post = event_day >= 0;
    s.day = announce + TimeDelta::days(event_day);
    s.week = iso_week_key(s.day);
    s
}
