use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Datelike, NaiveDate, TimeDelta};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::Serialize;

use super::config::DgpConfig;
use super::SynthError;
use crate::econ::Treatment;
use crate::grid::{
    assign_near, nearest_to_announcement, AnnouncementGroup, Coord, Rect, RegionSpec, Wave,
    WaveRecord,
};
use crate::ledger::{
    build_event_samples, ingest_records, nft_id, IngestOptions, MapMetadata, Panel, PanelOptions,
    RateTable, RawSale, Token,
};

const PLACEMENT_ATTEMPTS: usize = 5_000;
/// Spacing between the initial releases, which sit before the first
/// analysed announcement.
const INITIAL_SPACING_DAYS: i64 = 30;

/// A generated market: geometry, raw sales, daily rates and the config that
/// produced them.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub waves: Vec<Wave>,
    pub wave_records: Vec<WaveRecord>,
    pub groups: Vec<AnnouncementGroup>,
    pub transactions: Vec<RawSale>,
    /// Planted log USD price of each transaction, aligned with
    /// `transactions`.
    pub log_prices: Vec<f64>,
    pub rates: RateTable,
    pub truth: DgpConfig,
}

#[derive(Debug, Clone, Serialize)]
struct GroupTruth {
    group_id: u32,
    announce_date: NaiveDate,
    waves: usize,
    multi: bool,
    analysed: bool,
}

#[derive(Serialize)]
struct Truth<'a> {
    config: &'a DgpConfig,
    analysis_groups: [u32; 2],
    groups: Vec<GroupTruth>,
}

struct Placed {
    wave_id: u32,
    group_id: u32,
    rect: Rect,
}

struct Sale {
    tx_id: String,
    seconds: i64,
    day: NaiveDate,
    coords: Vec<Coord>,
    premium: bool,
    token: Token,
    mint_wave_id: u32,
    /// `(post, treat, multi)` for window sales.
    did: Option<(bool, f64, bool)>,
    log_price: f64,
}

fn draw_from<T: Copy>(rng: &mut ChaCha8Rng, law: &[(T, f64)]) -> T {
    let dist = WeightedIndex::new(law.iter().map(|(_, p)| *p)).expect("validated distribution");
    law[dist.sample(rng)].0
}

fn address(rng: &mut ChaCha8Rng) -> String {
    let mut bytes = [0u8; 20];
    rng.fill_bytes(&mut bytes);
    bytes[0] |= 1;
    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    format!("0x{hex}")
}

fn wave_counts(config: &DgpConfig, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let law: Vec<(u32, f64)> = config
        .waves_per_group
        .iter()
        .map(|(&k, &p)| (k, p))
        .collect();
    let multi_law: Vec<(u32, f64)> = law
        .iter()
        .copied()
        .filter(|(k, p)| *k > 1 && *p > 0.0)
        .collect();
    let mut counts: Vec<u32> = (0..config.n_groups).map(|_| draw_from(rng, &law)).collect();
    let multi = counts.iter().filter(|&&c| c > 1).count() as u32;
    for _ in multi..config.min_multi_groups {
        let i = counts.iter().position(|&c| c == 1).expect("enough groups");
        counts[i] = draw_from(rng, &multi_law);
    }
    let single = counts.iter().filter(|&&c| c == 1).count() as u32;
    for _ in single..config.min_single_groups {
        let i = counts.iter().rposition(|&c| c > 1).expect("enough groups");
        counts[i] = 1;
    }
    counts
}

fn place(occupied: &mut [bool], map_size: u32, edge: u32, rng: &mut ChaCha8Rng) -> Option<Rect> {
    if edge > map_size {
        return None;
    }
    let m = map_size as usize;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let x0 = rng.random_range(0..=map_size - edge);
        let y0 = rng.random_range(0..=map_size - edge);
        let rect = Rect::new(x0, y0, x0 + edge - 1, y0 + edge - 1);
        if rect
            .coords()
            .all(|c| !occupied[c.y as usize * m + c.x as usize])
        {
            for c in rect.coords() {
                occupied[c.y as usize * m + c.x as usize] = true;
            }
            return Some(rect);
        }
    }
    None
}

fn random_walk(
    rng: &mut ChaCha8Rng,
    days: &[NaiveDate],
    start: f64,
    drift: f64,
    sd: f64,
) -> BTreeMap<NaiveDate, f64> {
    let step = Normal::new(drift, sd).expect("finite parameters");
    let mut level = start.ln();
    days.iter()
        .map(|&d| {
            let v = level.exp();
            level += step.sample(rng);
            (d, v)
        })
        .collect()
}

/// Generates a market from `config`. The same config (including the seed)
/// always yields the same market.
pub fn generate_market(config: &DgpConfig) -> Result<SyntheticMarket, SynthError> {
    config.validate()?;
    let map_area = config.map_size as u64 * config.map_size as u64;
    if config.minimum_area() > map_area {
        return Err(SynthError::Capacity(format!(
            "releases need at least {} parcels but the map has {map_area}",
            config.minimum_area()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w = config.window_days as i64;

    // announcement calendar
    let counts = wave_counts(config, &mut rng);
    let mut dates: Vec<(u32, NaiveDate, u32)> = (1..=config.initial_groups)
        .map(|g| {
            let back = INITIAL_SPACING_DAYS * (config.initial_groups - g + 1) as i64;
            (g, config.first_announcement - TimeDelta::days(back), 1)
        })
        .collect();
    let mut announce = config.first_announcement;
    for (i, &n_waves) in counts.iter().enumerate() {
        if i > 0 {
            let [lo, hi] = config.announcement_gap_days;
            announce += TimeDelta::days(rng.random_range(lo..=hi) as i64);
        }
        dates.push((config.initial_groups + 1 + i as u32, announce, n_waves));
    }

    // geometry
    let mut occupied = vec![false; map_area as usize];
    let mut placed: Vec<Placed> = Vec::new();
    let mut records = Vec::new();
    for &(group_id, date, n_waves) in &dates {
        for _ in 0..n_waves {
            let wave_id = placed.len() as u32 + 1;
            let edge = if group_id <= config.initial_groups {
                config.initial_wave_edge
            } else {
                rng.random_range(config.wave_edge[0]..=config.wave_edge[1])
            };
            let rect = place(&mut occupied, config.map_size, edge, &mut rng).ok_or_else(|| {
                SynthError::Capacity(format!(
                    "grid exhausted placing wave {wave_id} of group {group_id} ({edge}x{edge})"
                ))
            })?;
            records.push(WaveRecord {
                wave_id,
                group_id,
                name: format!("Synthetic wave {wave_id}"),
                announce_date: date,
                sale_date: date + TimeDelta::days(w),
                region: RegionSpec::Rects {
                    rects: vec![[rect.x0, rect.y0, rect.x1, rect.y1]],
                },
                land_offered: None,
            });
            placed.push(Placed {
                wave_id,
                group_id,
                rect,
            });
        }
    }
    let waves: Vec<Wave> = records
        .iter()
        .cloned()
        .map(|r| r.into_wave(config.map_size))
        .collect::<Result<_, _>>()?;
    let groups = AnnouncementGroup::from_waves(&waves)?;
    let group_of = |id: u32| {
        groups
            .iter()
            .find(|g| g.group_id == id)
            .expect("group exists")
    };

    // calendar and planted effects
    let analysed: Vec<&AnnouncementGroup> = config.analysis_groups().map(group_of).collect();
    let first_day = analysed[0].announce_date - TimeDelta::days(w);
    let last_day = analysed[analysed.len() - 1].announce_date + TimeDelta::days(w);
    let days: Vec<NaiveDate> = first_day
        .iter_days()
        .take_while(|d| *d <= last_day)
        .collect();
    let day_normal = Normal::new(0.0, config.fe_scales.day).expect("validated scale");
    let day_fe: BTreeMap<NaiveDate, f64> = days
        .iter()
        .map(|&d| (d, day_normal.sample(&mut rng)))
        .collect();
    let wave_normal = Normal::new(0.0, config.fe_scales.mint_wave).expect("validated scale");
    let wave_fe: BTreeMap<u32, f64> = placed
        .iter()
        .map(|p| (p.wave_id, wave_normal.sample(&mut rng)))
        .collect();
    let monday = |d: NaiveDate| d - TimeDelta::days(d.weekday().num_days_from_monday() as i64);
    let last_week = (monday(last_day) - monday(first_day)).num_days() / 7;
    let drift = |d: NaiveDate| {
        if last_week == 0 {
            0.0
        } else {
            config.weekly_log_drift * ((monday(d) - monday(first_day)).num_days() / 7) as f64
                / last_week as f64
        }
    };

    let mut rates = RateTable::new();
    let eth = random_walk(&mut rng, &days, 1300.0, 0.003, 0.04);
    let sand = random_walk(&mut rng, &days, 0.3, 0.008, 0.05);
    let btc = random_walk(&mut rng, &days, 32_000.0, 0.001, 0.035);
    for &d in &days {
        rates.insert(d, Token::Eth, eth[&d])?;
        rates.insert(d, Token::Weth, eth[&d])?;
        rates.insert(d, Token::Sand, sand[&d])?;
        rates.insert_btc(d, btc[&d])?;
    }

    let lot_law: Vec<(u32, f64)> = config.lot_size_law.iter().map(|(&k, &p)| (k, p)).collect();
    let t = config.token_mix;
    let token_law = [
        (Token::Eth, t.eth),
        (Token::Sand, t.sand),
        (Token::Weth, t.weth),
    ];
    let noise = Normal::new(0.0, config.noise_sigma).expect("validated sigma");

    // released land as of a date: waves of groups announced strictly before
    let released = |date: NaiveDate| -> Vec<&Placed> {
        placed
            .iter()
            .filter(|p| group_of(p.group_id).announce_date < date)
            .collect()
    };
    let draw_parcels = |rng: &mut ChaCha8Rng, pool: &[&Placed], lot: u32| -> (Vec<Coord>, u32) {
        let side = (lot as f64).sqrt().round() as u32;
        let weights: Vec<u64> = pool.iter().map(|p| p.rect.area()).collect();
        let p = pool[WeightedIndex::new(&weights)
            .expect("non-empty pool")
            .sample(rng)];
        let x0 = rng.random_range(p.rect.x0..=p.rect.x1 + 1 - side);
        let y0 = rng.random_range(p.rect.y0..=p.rect.y1 + 1 - side);
        (
            Rect::new(x0, y0, x0 + side - 1, y0 + side - 1)
                .coords()
                .collect(),
            p.wave_id,
        )
    };

    let mut sales: Vec<Sale> = Vec::new();
    for group in &analysed {
        let pool = released(group.announce_date);
        let mut batch: Vec<(Sale, f64)> = Vec::with_capacity(config.transactions_per_group);
        for i in 0..config.transactions_per_group {
            let event_day = rng.random_range(-w..=w);
            let lot = draw_from(&mut rng, &lot_law);
            let (coords, _) = draw_parcels(&mut rng, &pool, lot);
            let nearest = nearest_to_announcement(&coords, group)?;
            let parcel = coords[nearest.parcel_index];
            let mint_wave_id = placed
                .iter()
                .find(|p| p.rect.contains(parcel))
                .expect("parcel in a wave")
                .wave_id;
            let sale = Sale {
                tx_id: format!("g{:02}-{i:05}", group.group_id),
                seconds: rng.random_range(0..86_400),
                day: group.announce_date + TimeDelta::days(event_day),
                coords,
                premium: rng.random_bool(config.premium_rate),
                token: draw_from(&mut rng, &token_law),
                mint_wave_id,
                did: Some((event_day >= 0, 0.0, group.multi)),
                log_price: 0.0,
            };
            batch.push((sale, nearest.distance));
        }
        let keyed: Vec<(String, f64)> = batch.iter().map(|(s, d)| (s.tx_id.clone(), *d)).collect();
        let near = assign_near(&keyed)?;
        for (mut sale, distance) in batch {
            let treat = match config.treatment {
                Treatment::DiscreteNear => near[&sale.tx_id] as u8 as f64,
                Treatment::ContinuousLogDistance => distance.ln(),
            };
            if let Some(did) = sale.did.as_mut() {
                did.1 = treat;
            }
            sales.push(sale);
        }
    }

    let window_days: Vec<NaiveDate> = days
        .iter()
        .copied()
        .filter(|d| {
            !analysed
                .iter()
                .any(|g| (*d - g.announce_date).num_days().abs() <= w)
        })
        .collect();
    if config.background_transactions > 0 && window_days.is_empty() {
        return Err(SynthError::InvalidConfig(
            "no days outside the windows for background sales".into(),
        ));
    }
    for i in 0..config.background_transactions {
        let day = window_days[rng.random_range(0..window_days.len())];
        let pool = released(day);
        let lot = draw_from(&mut rng, &lot_law);
        let (coords, mint_wave_id) = draw_parcels(&mut rng, &pool, lot);
        sales.push(Sale {
            tx_id: format!("bg-{i:06}"),
            seconds: rng.random_range(0..86_400),
            day,
            coords,
            premium: rng.random_bool(config.premium_rate),
            token: draw_from(&mut rng, &token_law),
            mint_wave_id,
            did: None,
            log_price: 0.0,
        });
    }

    // prices
    let b = config.true_betas;
    let g = config.gamma;
    for sale in &mut sales {
        let flag = |x: bool| x as u8 as f64;
        let mut y = config.intercept
            + g.log_lot_size * (sale.coords.len() as f64).ln()
            + g.premium * flag(sale.premium)
            + g.log_btc * (btc[&sale.day] / btc[&first_day]).ln()
            + g.paid_sand * flag(sale.token == Token::Sand)
            + g.paid_weth * flag(sale.token == Token::Weth)
            + day_fe[&sale.day]
            + wave_fe[&sale.mint_wave_id]
            + drift(sale.day);
        if let Some((post, treat, multi)) = sale.did {
            let (p, m) = (flag(post), flag(multi));
            y += b.post * p
                + b.near * treat
                + b.post_near * p * treat
                + b.multi * m
                + b.post_multi * p * m
                + b.post_near_multi * p * treat * m;
        }
        sale.log_price = y + noise.sample(&mut rng);
    }

    sales.sort_by(|a, b| (a.day, a.seconds, &a.tx_id).cmp(&(b.day, b.seconds, &b.tx_id)));
    let mut transactions = Vec::with_capacity(sales.len());
    let mut log_prices = Vec::with_capacity(sales.len());
    for sale in &sales {
        let rate = rates.rate(sale.day, sale.token)?;
        let timestamp =
            sale.day.and_hms_opt(0, 0, 0).expect("midnight") + TimeDelta::seconds(sale.seconds);
        let ids: Vec<String> = sale
            .coords
            .iter()
            .map(|&c| nft_id(c, config.map_size).to_string())
            .collect();
        transactions.push(RawSale {
            tx_id: sale.tx_id.clone(),
            timestamp_iso8601: timestamp.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            nft_ids: ids.join(";"),
            lot_size: sale.coords.len(),
            premium: sale.premium,
            token: sale.token.symbol().to_string(),
            price_token: sale.log_price.exp() / rate,
            seller: address(&mut rng),
            buyer: address(&mut rng),
        });
        log_prices.push(sale.log_price);
    }

    Ok(SyntheticMarket {
        waves,
        wave_records: records,
        groups,
        transactions,
        log_prices,
        rates,
        truth: config.clone(),
    })
}

impl SyntheticMarket {
    pub fn metadata(&self) -> MapMetadata {
        MapMetadata::from_waves(&self.waves, self.truth.map_size)
    }

    /// Runs ingestion and panel construction on the generated sales,
    /// restricted to the analysed groups.
    pub fn panel(&self, options: &PanelOptions) -> Result<Panel, SynthError> {
        let ingested = ingest_records(
            self.transactions
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, s)| (i + 1, s)),
            &self.metadata(),
            &IngestOptions::default(),
        );
        let mut panel =
            build_event_samples(&ingested.transactions, &self.groups, &self.rates, options)?;
        let mut rejections = ingested.rejections;
        rejections.append(&mut panel.rejections);
        panel.rejections = rejections;
        Ok(panel)
    }

    /// Panel options matching the generator: analysed groups only, its
    /// window length.
    pub fn panel_options(&self) -> PanelOptions {
        let groups = self.truth.analysis_groups();
        PanelOptions {
            window_days: self.truth.window_days,
            groups: Some(crate::ledger::GroupFilter {
                first: *groups.start(),
                last: *groups.end(),
            }),
            ..PanelOptions::default()
        }
    }

    pub fn write_transactions<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        let mut w = csv::Writer::from_writer(writer);
        for t in &self.transactions {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_waves<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        crate::grid::write_waves(writer, &self.wave_records)?;
        Ok(())
    }

    pub fn write_rates<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        self.rates.write(writer)?;
        Ok(())
    }

    /// The config plus per-group wave counts and Multi flags.
    pub fn write_truth<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        let range = self.truth.analysis_groups();
        let truth = Truth {
            config: &self.truth,
            analysis_groups: [*range.start(), *range.end()],
            groups: self
                .groups
                .iter()
                .map(|g| GroupTruth {
                    group_id: g.group_id,
                    announce_date: g.announce_date,
                    waves: g.waves.len(),
                    multi: g.multi,
                    analysed: range.contains(&g.group_id),
                })
                .collect(),
        };
        serde_json::to_writer_pretty(writer, &truth)?;
        Ok(())
    }
}
