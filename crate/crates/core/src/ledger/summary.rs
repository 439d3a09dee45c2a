use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{EventSample, LedgerError};
use crate::stats;

/// Per-group descriptive statistics: observations, USD price, distance to
/// the new region, lot size and the premium / SAND / wETH shares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: String,
    pub obs: usize,
    pub price_mean: f64,
    pub price_std: f64,
    pub distance_mean: f64,
    pub distance_median: f64,
    pub lot_size_mean: f64,
    pub premium_share: f64,
    pub sand_share: f64,
    pub weth_share: f64,
}

fn row(group: String, samples: &[&EventSample]) -> SummaryRow {
    let prices: Vec<f64> = samples.iter().map(|s| s.price_usd).collect();
    let distances: Vec<f64> = samples.iter().map(|s| s.distance).collect();
    let lots: Vec<f64> = samples.iter().map(|s| s.lot_size as f64).collect();
    let share = |f: fn(&EventSample) -> bool| {
        samples.iter().filter(|s| f(s)).count() as f64 / samples.len() as f64
    };
    SummaryRow {
        group,
        obs: samples.len(),
        price_mean: stats::mean(&prices).unwrap_or(f64::NAN),
        price_std: stats::std_dev(&prices).unwrap_or(f64::NAN),
        distance_mean: stats::mean(&distances).unwrap_or(f64::NAN),
        distance_median: stats::median(&distances).unwrap_or(f64::NAN),
        lot_size_mean: stats::mean(&lots).unwrap_or(f64::NAN),
        premium_share: share(|s| s.premium),
        sand_share: share(|s| s.paid_sand),
        weth_share: share(|s| s.paid_weth),
    }
}

/// One row per group (ascending id) plus a pooled `All` row. Empty input
/// yields no rows.
pub fn summary_stats(samples: &[EventSample]) -> Vec<SummaryRow> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut by_group: BTreeMap<u32, Vec<&EventSample>> = BTreeMap::new();
    for s in samples {
        by_group.entry(s.group_id).or_default().push(s);
    }
    let mut rows: Vec<SummaryRow> = by_group
        .into_iter()
        .map(|(g, members)| row(g.to_string(), &members))
        .collect();
    let all: Vec<&EventSample> = samples.iter().collect();
    rows.push(row("All".into(), &all));
    rows
}

pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<(), LedgerError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    fn sample(
        group_id: u32,
        price: f64,
        distance: f64,
        lot: usize,
        flags: (bool, bool, bool),
    ) -> EventSample {
        EventSample {
            tx_id: format!("{group_id}-{price}"),
            group_id,
            price_usd: price,
            log_price: price.ln(),
            distance,
            log_distance: distance.ln(),
            near: false,
            post: false,
            multi: false,
            lot_size: lot,
            log_lot_size: (lot as f64).ln(),
            premium: flags.0,
            paid_sand: flags.1,
            paid_weth: flags.2,
            log_btc: 10.0,
            mint_wave_id: 1,
            day: NaiveDate::from_ymd_opt(2021, 1, 26).unwrap(),
            week: 202104,
            event_day: 0,
        }
    }

    #[test]
    fn single_sample_fills_every_cell() {
        let rows = summary_stats(&[sample(8, 850.0, 290.0, 4, (true, false, true))]);
        assert_eq!(rows.len(), 2);
        let r = &rows[0];
        assert_eq!((r.group.as_str(), r.obs), ("8", 1));
        assert_eq!((r.price_mean, r.price_std), (850.0, 0.0));
        assert_eq!((r.distance_mean, r.distance_median), (290.0, 290.0));
        assert_eq!(r.lot_size_mean, 4.0);
        assert_eq!(
            (r.premium_share, r.sand_share, r.weth_share),
            (1.0, 0.0, 1.0)
        );
        assert_eq!(rows[1].group, "All");
        assert_eq!(rows[1].price_mean, 850.0);
    }

    #[test]
    fn two_groups_hand_computed() {
        let samples = vec![
            sample(8, 100.0, 10.0, 1, (false, false, false)),
            sample(8, 300.0, 30.0, 3, (true, true, false)),
            sample(9, 1000.0, 5.0, 1, (false, false, true)),
            sample(9, 2000.0, 15.0, 1, (false, false, false)),
            sample(9, 3000.0, 40.0, 2, (false, true, false)),
        ];
        let rows = summary_stats(&samples);
        let g8 = &rows[0];
        assert_eq!(g8.price_mean, 200.0);
        assert!((g8.price_std - 20_000f64.sqrt()).abs() < 1e-9);
        assert_eq!(g8.distance_median, 20.0);
        assert_eq!(g8.lot_size_mean, 2.0);
        assert_eq!((g8.premium_share, g8.sand_share), (0.5, 0.5));
        let g9 = &rows[1];
        assert_eq!(g9.price_mean, 2000.0);
        assert_eq!(g9.price_std, 1000.0);
        assert_eq!(g9.distance_mean, 20.0);
        assert_eq!(g9.distance_median, 15.0);
        let all = &rows[2];
        assert_eq!(all.obs, 5);
        assert_eq!(all.price_mean, 1280.0);
        assert_eq!(all.distance_median, 15.0);
        assert_eq!(all.lot_size_mean, 1.6);
        assert_eq!(all.weth_share, 0.2);
    }

    #[test]
    fn csv_header_mirrors_descriptive_table() {
        let mut buf = Vec::new();
        write_summary(
            &mut buf,
            &summary_stats(&[sample(8, 1.0, 1.0, 1, (false, false, false))]),
        )
        .unwrap();
        let header = String::from_utf8(buf)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(
            header,
            "group,obs,price_mean,price_std,distance_mean,distance_median,lot_size_mean,premium_share,sand_share,weth_share"
        );
    }
}
