use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EconError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependent {
    #[default]
    LogPrice,
}

/// How proximity to the new region enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Treatment {
    /// Below-median distance dummy.
    DiscreteNear,
    /// Log Euclidean distance.
    ContinuousLogDistance,
}

impl Treatment {
    pub fn term(self) -> &'static str {
        match self {
            Treatment::DiscreteNear => "near",
            Treatment::ContinuousLogDistance => "log_distance",
        }
    }
}

impl FromStr for Treatment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "near" | "discrete" | "discrete_near" => Ok(Treatment::DiscreteNear),
            "logdist" | "log_distance" | "continuous" | "continuous_log_distance" => {
                Ok(Treatment::ContinuousLogDistance)
            }
            other => Err(format!(
                "unknown treatment {other:?} (expected near|logdist)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    LogLotSize,
    Premium,
    LogBtc,
    PaidSand,
    PaidWeth,
}

impl Control {
    pub fn name(self) -> &'static str {
        match self {
            Control::LogLotSize => "log_lot_size",
            Control::Premium => "premium",
            Control::LogBtc => "log_btc",
            Control::PaidSand => "paid_sand",
            Control::PaidWeth => "paid_weth",
        }
    }
}

/// Absorbed fixed-effect dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeDim {
    Day,
    Week,
    MintWave,
}

impl FeDim {
    pub fn name(self) -> &'static str {
        match self {
            FeDim::Day => "day",
            FeDim::Week => "week",
            FeDim::MintWave => "mint_wave",
        }
    }
}

impl fmt::Display for FeDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeType {
    #[default]
    Classical,
    Hc1,
}

impl SeType {
    pub fn name(self) -> &'static str {
        match self {
            SeType::Classical => "classical",
            SeType::Hc1 => "hc1",
        }
    }
}

impl FromStr for SeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(SeType::Classical),
            "hc1" => Ok(SeType::Hc1),
            other => Err(format!("unknown standard error type {other:?}")),
        }
    }
}

/// Regression specification.
///
/// With `treatment: None` the model is the plain hedonic regression (no
/// DiD terms). An intercept column is added only when no fixed effects are
/// absorbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dependent: Dependent,
    pub treatment: Option<Treatment>,
    /// Adds Multi, Post×Multi and Post×Treat×Multi.
    pub include_multi_interactions: bool,
    /// Also adds Treat×Multi, which saturates the 2×2×2 design.
    #[serde(default)]
    pub include_treat_multi: bool,
    pub controls: Vec<Control>,
    pub fe_dimensions: Vec<FeDim>,
    pub se_type: SeType,
}

const BASE_CONTROLS: [Control; 3] = [Control::LogLotSize, Control::Premium, Control::LogBtc];
const FULL_CONTROLS: [Control; 4] = [
    Control::LogLotSize,
    Control::Premium,
    Control::PaidSand,
    Control::PaidWeth,
];

impl ModelSpec {
    pub fn new(treatment: Option<Treatment>) -> Self {
        Self {
            dependent: Dependent::LogPrice,
            treatment,
            include_multi_interactions: false,
            include_treat_multi: false,
            controls: Vec::new(),
            fe_dimensions: Vec::new(),
            se_type: SeType::Classical,
        }
    }

    /// Plain 2×2 DiD with an intercept and nothing else.
    pub fn saturated(treatment: Treatment) -> Self {
        Self::new(Some(treatment))
    }

    pub fn with_controls(mut self, controls: &[Control]) -> Self {
        self.controls = controls.to_vec();
        self
    }

    pub fn with_fe(mut self, fe: &[FeDim]) -> Self {
        self.fe_dimensions = fe.to_vec();
        self
    }

    pub fn with_multi(mut self) -> Self {
        self.include_multi_interactions = true;
        self
    }

    pub fn with_se(mut self, se: SeType) -> Self {
        self.se_type = se;
        self
    }

    /// Full specification: daily and mint-wave effects, lot size, premium
    /// and settlement-token dummies.
    pub fn full(treatment: Treatment) -> Self {
        Self::new(Some(treatment))
            .with_controls(&FULL_CONTROLS)
            .with_fe(&[FeDim::Day, FeDim::MintWave])
    }

    /// Discrete-treatment columns 1–4 of the main DiD table.
    pub fn discrete_column(col: usize) -> Result<Self, EconError> {
        let t = Some(Treatment::DiscreteNear);
        Ok(match col {
            1 => Self::new(t)
                .with_controls(&BASE_CONTROLS)
                .with_fe(&[FeDim::Week]),
            2 => Self::new(t)
                .with_controls(&BASE_CONTROLS)
                .with_fe(&[FeDim::Week, FeDim::MintWave]),
            3 => Self::new(t)
                .with_controls(&[Control::LogLotSize, Control::Premium])
                .with_fe(&[FeDim::Day, FeDim::MintWave]),
            4 => Self::full(Treatment::DiscreteNear),
            _ => return Err(EconError::InvalidSpec(format!("no discrete column {col}"))),
        })
    }

    /// Continuous-treatment columns 1–2.
    pub fn continuous_column(col: usize) -> Result<Self, EconError> {
        Ok(match col {
            1 => Self::new(Some(Treatment::ContinuousLogDistance))
                .with_controls(&[Control::LogLotSize, Control::Premium])
                .with_fe(&[FeDim::Day, FeDim::MintWave]),
            2 => Self::full(Treatment::ContinuousLogDistance),
            _ => {
                return Err(EconError::InvalidSpec(format!(
                    "no continuous column {col}"
                )))
            }
        })
    }

    /// Triple-difference full specification.
    pub fn triple(treatment: Treatment) -> Self {
        Self::full(treatment).with_multi()
    }

    /// Hedonic regression with period effects and no DiD terms.
    pub fn hedonic(period: FeDim, controls: &[Control]) -> Self {
        Self::new(None).with_controls(controls).with_fe(&[period])
    }

    pub fn validate(&self) -> Result<(), EconError> {
        if self.fe_dimensions.contains(&FeDim::Day) && self.controls.contains(&Control::LogBtc) {
            return Err(EconError::InvalidSpec(
                "log_btc is collinear with daily fixed effects".into(),
            ));
        }
        if (self.include_multi_interactions || self.include_treat_multi) && self.treatment.is_none()
        {
            return Err(EconError::InvalidSpec(
                "multi interactions need a treatment".into(),
            ));
        }
        if self.include_treat_multi && !self.include_multi_interactions {
            return Err(EconError::InvalidSpec(
                "treat x multi requires the multi interactions".into(),
            ));
        }
        let mut fe = self.fe_dimensions.clone();
        fe.sort();
        fe.dedup();
        if fe.len() != self.fe_dimensions.len() {
            return Err(EconError::InvalidSpec(
                "duplicate fixed-effect dimension".into(),
            ));
        }
        let mut c = self.controls.clone();
        c.sort();
        c.dedup();
        if c.len() != self.controls.len() {
            return Err(EconError::InvalidSpec("duplicate control".into()));
        }
        Ok(())
    }

    /// Name of the DiD coefficient (Post × Treat).
    pub fn did_term(&self) -> Option<String> {
        self.treatment.map(|t| format!("post_x_{}", t.term()))
    }

    /// Name of the triple-difference coefficient (Post × Treat × Multi).
    pub fn triple_term(&self) -> Option<String> {
        self.treatment
            .filter(|_| self.include_multi_interactions)
            .map(|t| format!("post_x_{}_x_multi", t.term()))
    }
}

/// Human-readable label for a coefficient name.
pub fn term_label(term: &str) -> String {
    match term {
        "intercept" => "Intercept".into(),
        "post" => "Post announcement".into(),
        "near" => "Near new LAND (median)".into(),
        "log_distance" => "Log(distance)".into(),
        "post_x_near" => "Post * Near".into(),
        "post_x_log_distance" => "Post * log(distance)".into(),
        "multi" => "Multi-wave".into(),
        "post_x_multi" => "Post * Multi-wave".into(),
        "near_x_multi" => "Near * Multi-wave".into(),
        "log_distance_x_multi" => "log(distance) * Multi-wave".into(),
        "post_x_near_x_multi" => "Post * Near * Multi-wave".into(),
        "post_x_log_distance_x_multi" => "Post * log(distance) * Multi-wave".into(),
        "log_lot_size" => "Log(lot size)".into(),
        "premium" => "Premium LAND".into(),
        "log_btc" => "Log(BTC price)".into(),
        "paid_sand" => "Paid in SAND".into(),
        "paid_weth" => "Paid in wETH".into(),
        other => other.into(),
    }
}
