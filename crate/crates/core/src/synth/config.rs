use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::econ::Treatment;
use crate::grid::DEFAULT_MAP_SIZE;

/// Planted DiD and triple-difference coefficients. Under the continuous
/// treatment `near` and `post_near` multiply log distance instead of the
/// near dummy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrueBetas {
    pub post: f64,
    pub near: f64,
    pub post_near: f64,
    pub multi: f64,
    pub post_multi: f64,
    pub post_near_multi: f64,
}

impl Default for TrueBetas {
    fn default() -> Self {
        Self {
            post: 0.111,
            near: 0.054,
            post_near: 0.084,
            multi: 0.0,
            post_multi: 0.0,
            post_near_multi: -0.173,
        }
    }
}

impl TrueBetas {
    pub fn zero() -> Self {
        Self {
            post: 0.0,
            near: 0.0,
            post_near: 0.0,
            multi: 0.0,
            post_multi: 0.0,
            post_near_multi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gamma {
    pub log_lot_size: f64,
    pub premium: f64,
    pub log_btc: f64,
    pub paid_sand: f64,
    pub paid_weth: f64,
}

impl Default for Gamma {
    fn default() -> Self {
        Self {
            log_lot_size: 1.071,
            premium: 0.420,
            log_btc: 1.713,
            paid_sand: 0.121,
            paid_weth: -0.380,
        }
    }
}

impl Gamma {
    pub fn zero() -> Self {
        Self {
            log_lot_size: 0.0,
            premium: 0.0,
            log_btc: 0.0,
            paid_sand: 0.0,
            paid_weth: 0.0,
        }
    }
}

/// Standard deviations of the planted day and mint-wave effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeScales {
    pub day: f64,
    pub mint_wave: f64,
}

impl Default for FeScales {
    fn default() -> Self {
        Self {
            day: 0.3,
            mint_wave: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenMix {
    pub eth: f64,
    pub sand: f64,
    pub weth: f64,
}

impl Default for TokenMix {
    fn default() -> Self {
        Self {
            eth: 0.807,
            sand: 0.054,
            weth: 0.139,
        }
    }
}

/// Parameters of the synthetic land market.
///
/// Groups `1..=initial_groups` are single-wave releases that exist only to
/// provide tradable land; the analysed groups follow with consecutive ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub seed: u64,
    pub map_size: u32,
    pub initial_groups: u32,
    /// Edge length of each initial release.
    pub initial_wave_edge: u32,
    pub n_groups: u32,
    /// Probability of each wave count per analysed group.
    pub waves_per_group: BTreeMap<u32, f64>,
    pub min_multi_groups: u32,
    pub min_single_groups: u32,
    /// Inclusive range of wave edge lengths.
    pub wave_edge: [u32; 2],
    pub transactions_per_group: usize,
    /// Sales on days outside every analysed window.
    pub background_transactions: usize,
    pub first_announcement: NaiveDate,
    /// Inclusive range of days between analysed announcements.
    pub announcement_gap_days: [u32; 2],
    pub window_days: u32,
    pub treatment: Treatment,
    /// Log USD price of a plain single parcel at the starting BTC price.
    pub intercept: f64,
    pub true_betas: TrueBetas,
    pub gamma: Gamma,
    pub fe_scales: FeScales,
    pub noise_sigma: f64,
    /// Total log drift from the first to the last week, linear in weeks.
    pub weekly_log_drift: f64,
    pub token_mix: TokenMix,
    pub premium_rate: f64,
    /// Probability of each lot size; sizes must be squares (k x k bundles).
    pub lot_size_law: BTreeMap<u32, f64>,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            seed: 20211028,
            map_size: DEFAULT_MAP_SIZE,
            initial_groups: 7,
            initial_wave_edge: 40,
            n_groups: 10,
            waves_per_group: BTreeMap::from([(1, 0.6), (4, 0.2), (5, 0.2)]),
            min_multi_groups: 2,
            min_single_groups: 2,
            wave_edge: [16, 24],
            transactions_per_group: 1000,
            background_transactions: 0,
            first_announcement: NaiveDate::from_ymd_opt(2021, 1, 26).expect("valid date"),
            announcement_gap_days: [15, 40],
            window_days: 7,
            treatment: Treatment::DiscreteNear,
            intercept: 7.3,
            true_betas: TrueBetas::default(),
            gamma: Gamma::default(),
            fe_scales: FeScales::default(),
            noise_sigma: 0.5,
            weekly_log_drift: 0.0,
            token_mix: TokenMix::default(),
            premium_rate: 0.062,
            lot_size_law: BTreeMap::from([(1, 0.95), (9, 0.04), (36, 0.01)]),
        }
    }
}

fn check_distribution(name: &str, probs: impl Iterator<Item = f64>) -> Result<(), SynthError> {
    let mut total = 0.0;
    for p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(SynthError::InvalidConfig(format!(
                "{name}: probability {p} outside [0, 1]"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(SynthError::InvalidConfig(format!(
            "{name}: probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

impl DgpConfig {
    /// Plain DiD market: no Multi terms, so Post×Near is the only planted
    /// interaction.
    pub fn did() -> Self {
        Self {
            true_betas: TrueBetas {
                post_near_multi: 0.0,
                ..TrueBetas::default()
            },
            ..Self::default()
        }
    }

    /// Continuous-treatment market with log-distance effects.
    pub fn continuous() -> Self {
        Self {
            treatment: Treatment::ContinuousLogDistance,
            true_betas: TrueBetas {
                near: -0.009,
                post_near: -0.034,
                post_near_multi: 0.0,
                ..TrueBetas::default()
            },
            ..Self::default()
        }
    }

    /// Triple-difference market with the default planted coefficients.
    pub fn triple() -> Self {
        Self::default()
    }

    /// Noise-free market with every effect switched off.
    pub fn degenerate() -> Self {
        Self {
            true_betas: TrueBetas::zero(),
            gamma: Gamma::zero(),
            fe_scales: FeScales {
                day: 0.0,
                mint_wave: 0.0,
            },
            noise_sigma: 0.0,
            ..Self::default()
        }
    }

    /// Ids of the analysed groups.
    pub fn analysis_groups(&self) -> std::ops::RangeInclusive<u32> {
        self.initial_groups + 1..=self.initial_groups + self.n_groups
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        check_distribution("waves_per_group", self.waves_per_group.values().copied())?;
        check_distribution("lot_size_law", self.lot_size_law.values().copied())?;
        let t = self.token_mix;
        check_distribution("token_mix", [t.eth, t.sand, t.weth].into_iter())?;
        if !(0.0..=1.0).contains(&self.premium_rate) {
            return bad(format!("premium_rate {} outside [0, 1]", self.premium_rate));
        }
        if self.waves_per_group.keys().any(|&k| k == 0) {
            return bad("waves_per_group: zero waves".into());
        }
        if self.n_groups < 2 {
            return bad(format!(
                "n_groups must be at least 2, got {}",
                self.n_groups
            ));
        }
        if self.min_multi_groups + self.min_single_groups > self.n_groups {
            return bad(format!(
                "{} multi and {} single groups requested but only {} groups",
                self.min_multi_groups, self.min_single_groups, self.n_groups
            ));
        }
        let has_multi = self.waves_per_group.iter().any(|(&k, &p)| k > 1 && p > 0.0);
        let has_single = self.waves_per_group.get(&1).is_some_and(|&p| p > 0.0);
        if (self.min_multi_groups > 0 && !has_multi) || (self.min_single_groups > 0 && !has_single)
        {
            return bad("waves_per_group cannot produce the required multi/single groups".into());
        }
        if self.initial_groups == 0 {
            return bad("need at least one initial release to trade on".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        if self.fe_scales.day < 0.0 || self.fe_scales.mint_wave < 0.0 {
            return bad("fe_scales must be non-negative".into());
        }
        let [lo, hi] = self.wave_edge;
        if lo == 0 || lo > hi {
            return bad(format!("wave_edge range [{lo}, {hi}] is empty"));
        }
        let [g_lo, g_hi] = self.announcement_gap_days;
        if g_lo > g_hi || g_lo < 2 * self.window_days + 1 {
            return bad(format!(
                "announcement gaps [{g_lo}, {g_hi}] must be at least {} days to keep windows apart",
                2 * self.window_days + 1
            ));
        }
        let min_edge = lo.min(self.initial_wave_edge);
        for &size in self.lot_size_law.keys() {
            let side = (size as f64).sqrt().round() as u32;
            if size == 0 || side * side != size {
                return bad(format!("lot size {size} is not a square bundle"));
            }
            if side > min_edge {
                return bad(format!(
                    "lot size {size} does not fit in a {min_edge}-wide wave"
                ));
            }
        }
        if self.transactions_per_group < 2 {
            return bad("transactions_per_group must be at least 2".into());
        }
        if self.map_size == 0 {
            return bad("map_size must be positive".into());
        }
        Ok(())
    }

    /// Smallest area the releases could need, used for an early capacity
    /// check.
    pub(crate) fn minimum_area(&self) -> u64 {
        let min_waves = *self.waves_per_group.keys().next().unwrap_or(&1) as u64;
        let multi_waves = self
            .waves_per_group
            .keys()
            .copied()
            .filter(|&k| k > 1)
            .min()
            .unwrap_or(1) as u64;
        let lo = self.wave_edge[0] as u64;
        let initial = self.initial_groups as u64 * (self.initial_wave_edge as u64).pow(2);
        let forced = self.min_multi_groups as u64 * multi_waves
            + (self.n_groups - self.min_multi_groups) as u64 * min_waves;
        initial + forced * lo * lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        DgpConfig::default().validate().unwrap();
        DgpConfig::did().validate().unwrap();
        DgpConfig::continuous().validate().unwrap();
        DgpConfig::degenerate().validate().unwrap();
        assert_eq!(DgpConfig::default().analysis_groups(), 8..=17);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let c = DgpConfig {
            token_mix: TokenMix {
                eth: 0.5,
                sand: 0.1,
                weth: 0.1,
            },
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn windows_must_not_touch() {
        let c = DgpConfig {
            announcement_gap_days: [14, 30],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn lot_sizes_must_be_squares() {
        let c = DgpConfig {
            lot_size_law: BTreeMap::from([(1, 0.5), (8, 0.5)]),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_with_partial_input() {
        let c: DgpConfig =
            serde_json::from_str(r#"{"seed": 7, "true_betas": {"post_near": 0.2}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.true_betas.post_near, 0.2);
        assert_eq!(c.true_betas.post, 0.111);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<DgpConfig>(&text).unwrap(), c);
    }
}
